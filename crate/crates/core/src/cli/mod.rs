//! Command-line front end: scenario runs and parameter scans written as CSV.

mod scenario;

pub use scenario::{OutputKind, Scenario, TimeGrid, SCHEMA_VERSION};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dynamics::{evolve, survival_probability, InnerProduct, SurvivalOptions};
use crate::error::{Error, Result};
use crate::linalg;
use crate::metric::MetricCase;
use crate::observables::{self, SpinMoments};
use crate::pipeline::{prepare, EpMode};
use crate::spectral::{count_real_on_family, locate_exceptional_points, Classification, Tolerances};
use crate::spin::{build_hamiltonian, coherent_spin_state, oat_family, SpinSystem, REFERENCE_OMEGA};

/// Fixed 17-significant-digit rendering so identical runs give identical files.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// In-memory CSV table; rows are joined with `\n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx].parse().unwrap_or(f64::NAN)).collect())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub tau_real: Option<f64>,
    pub tau_pair: Option<f64>,
    pub tau_defect: Option<f64>,
    pub tau_jordan: Option<f64>,
    pub ep_mode: Option<EpMode>,
    pub normalize: Option<bool>,
    pub inner_product: Option<InnerProduct>,
}

impl Overrides {
    pub fn tolerances(&self, base: Tolerances) -> Result<Tolerances> {
        let t = Tolerances {
            tau_real: self.tau_real.unwrap_or(base.tau_real),
            tau_pair: self.tau_pair.unwrap_or(base.tau_pair),
            tau_defect: self.tau_defect.unwrap_or(base.tau_defect),
            tau_jordan: self.tau_jordan.unwrap_or(base.tau_jordan),
        };
        t.validate().map_err(|e| Error::config("tolerances", e.to_string()))?;
        Ok(t)
    }

    pub fn apply(&self, scenario: &mut Scenario) -> Result<()> {
        scenario.tolerances = self.tolerances(scenario.tolerances)?;
        if let Some(m) = self.ep_mode {
            scenario.ep_mode = m;
        }
        if let Some(n) = self.normalize {
            scenario.normalize = n;
        }
        if let Some(i) = self.inner_product {
            scenario.inner_product = i;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub scenario_path: String,
    pub scenario_sha256: String,
    pub schema_version: u32,
    pub scenario: Scenario,
    pub tolerances: Tolerances,
    pub classification: Classification,
    pub metric_case: MetricCase,
    pub propagation: crate::dynamics::PropagationMode,
    pub real_eigenvalues: usize,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
}

/// Runs the scenario held in `text` and writes the requested tables plus
/// `run_record.json` into `out_dir`.
pub fn run_scenario_text(text: &str, source: &str, out_dir: &Path, overrides: &Overrides) -> Result<RunRecord> {
    let started = Instant::now();
    let mut scenario = Scenario::from_toml(text)?;
    overrides.apply(&mut scenario)?;
    let hash = hex::encode(Sha256::digest(text.as_bytes()));

    let tables = scenario_tables(&scenario)?;
    fs::create_dir_all(out_dir)?;
    let mut outputs = Vec::new();
    for (kind, table) in &tables.tables {
        let path = out_dir.join(kind.file_name());
        table.write(&path)?;
        outputs.push(path.display().to_string());
    }
    let record_path = out_dir.join("run_record.json");
    let record = RunRecord {
        scenario_path: source.to_string(),
        scenario_sha256: hash,
        schema_version: scenario.schema_version,
        tolerances: scenario.tolerances,
        classification: tables.classification,
        metric_case: tables.metric_case,
        propagation: tables.propagation,
        real_eigenvalues: tables.real_eigenvalues,
        scenario,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        outputs,
    };
    let json = serde_json::to_string_pretty(&record).map_err(|e| Error::Numerical(e.to_string()))?;
    fs::write(record_path, json + "\n")?;
    Ok(record)
}

pub fn run_scenario(path: &Path, out_dir: &Path, overrides: &Overrides) -> Result<RunRecord> {
    let text = fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), format!("cannot read scenario: {e}")))?;
    run_scenario_text(&text, &path.display().to_string(), out_dir, overrides)
}

#[derive(Debug, Clone)]
pub struct ScenarioTables {
    pub tables: Vec<(OutputKind, Table)>,
    pub classification: Classification,
    pub metric_case: MetricCase,
    pub propagation: crate::dynamics::PropagationMode,
    pub real_eigenvalues: usize,
}

/// Everything a scenario produces, without touching the filesystem.
pub fn scenario_tables(scenario: &Scenario) -> Result<ScenarioTables> {
    let sys = SpinSystem::from_particles(scenario.particles);
    let h = build_hamiltonian(&sys, &scenario.model)?;
    let tol = &scenario.tolerances;
    let prepared = prepare(&h, tol, scenario.ep_mode, scenario.metric_mode, &scenario.alpha)?;
    let css = coherent_spin_state(&sys, scenario.theta0, scenario.phi0)?;
    let times = scenario.time.samples();
    let needs_evolution = scenario.outputs.iter().any(|o| *o != OutputKind::Spectrum);
    let evolution = if needs_evolution { Some(evolve(&css.amplitudes, &prepared.propagator, &prepared.metric, &times)?) } else { None };

    let mut tables = Vec::new();
    for &kind in &scenario.outputs {
        let table = match kind {
            OutputKind::Spectrum => {
                let mut t = Table::new(&["j", "re", "im", "is_real"]);
                for (j, e) in prepared.spectral.eigenvalues.iter().enumerate() {
                    let is_real = e.im.abs() < tol.tau_real * prepared.spectral.h_norm;
                    t.push(vec![j.to_string(), fmt_f64(e.re), fmt_f64(e.im), (is_real as u8).to_string()]);
                }
                t
            }
            OutputKind::Survival => {
                let res = evolution.as_ref().expect("evolution computed");
                let opts = SurvivalOptions { inner: scenario.inner_product, normalize: scenario.normalize };
                let p = survival_probability(res, &prepared.metric, opts);
                let mut t = Table::new(&["t", "p"]);
                for (time, v) in times.iter().zip(p) {
                    t.push(vec![fmt_f64(*time), fmt_f64(v)]);
                }
                t
            }
            OutputKind::SpinMeans => {
                let res = evolution.as_ref().expect("evolution computed");
                let mut t = Table::new(&["t", "sx", "sy", "sz"]);
                let [sx, sy, sz] = sys.components();
                let rows: Vec<Vec<String>> = times
                    .par_iter()
                    .enumerate()
                    .map(|(k, time)| {
                        // Raw values need the physical amplitude, normalized ones do not.
                        let state = if scenario.normalize { res.states[k].clone() } else { res.state(k) };
                        let mut row = vec![fmt_f64(*time)];
                        for op in [sx, sy, sz] {
                            row.push(fmt_f64(observables::expectation(&state, op, &prepared.metric, scenario.normalize)?));
                        }
                        Ok(row)
                    })
                    .collect::<Result<_>>()?;
                for row in rows {
                    t.push(row);
                }
                t
            }
            OutputKind::Squeezing => {
                let res = evolution.as_ref().expect("evolution computed");
                let moments = SpinMoments::new(&sys, &prepared.metric)?;
                let mut t = Table::new(&[
                    "t",
                    "zeta2_x",
                    "zeta2_y",
                    "zeta2_x_db",
                    "zeta2_y_db",
                    "neg_zeta2_x_db",
                    "neg_zeta2_y_db",
                    "var_x",
                    "var_y",
                    "mean_x",
                    "mean_y",
                    "mean_z",
                    "uncertainty_product",
                    "satisfies_bound",
                    "is_intelligent",
                ]);
                let rows: Vec<Vec<String>> = times
                    .iter()
                    .enumerate()
                    .map(|(k, time)| {
                        let r = moments.report(&res.states[k])?;
                        let check =
                            observables::uncertainty_check(&r, observables::DEFAULT_BOUND_TOL, observables::DEFAULT_INTELLIGENT_TOL);
                        Ok(vec![
                            fmt_f64(*time),
                            fmt_f64(r.zeta2_x),
                            fmt_f64(r.zeta2_y),
                            fmt_f64(r.zeta2_x_db),
                            fmt_f64(r.zeta2_y_db),
                            fmt_f64(-r.zeta2_x_db),
                            fmt_f64(-r.zeta2_y_db),
                            fmt_f64(r.var_x),
                            fmt_f64(r.var_y),
                            fmt_f64(r.mean_spin[0]),
                            fmt_f64(r.mean_spin[1]),
                            fmt_f64(r.mean_spin[2]),
                            fmt_f64(r.uncertainty_product),
                            (check.satisfies_bound as u8).to_string(),
                            (check.is_intelligent as u8).to_string(),
                        ])
                    })
                    .collect::<Result<_>>()?;
                for row in rows {
                    t.push(row);
                }
                t
            }
            OutputKind::Norms => {
                let res = evolution.as_ref().expect("evolution computed");
                let mut t = Table::new(&["t", "s_norm", "ln_s_norm", "euclidean_norm_sq"]);
                for k in 0..res.len() {
                    let scaled_s = res.states[k].dotc(&(&prepared.metric.s_k * &res.states[k])).re;
                    let ln_s = scaled_s.ln() + 2.0 * res.log_scale[k];
                    let eu = res.states[k].norm_squared() * (2.0 * res.log_scale[k]).exp();
                    t.push(vec![fmt_f64(res.times[k]), fmt_f64(res.s_norms[k]), fmt_f64(ln_s), fmt_f64(eu)]);
                }
                t
            }
        };
        tables.push((kind, table));
    }

    Ok(ScenarioTables {
        tables,
        classification: prepared.spectral.classification,
        metric_case: prepared.case(),
        propagation: prepared.propagator.mode,
        real_eigenvalues: prepared.spectral.real_count(tol),
    })
}

fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points).map(|k| if k + 1 == points { hi } else { lo + (hi - lo) * k as f64 / (points - 1) as f64 }).collect()
}

fn check_range(lo: f64, hi: f64, points: usize) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::config("range", format!("bounds must be finite and ordered, got [{lo}, {hi}]")));
    }
    if points < 2 {
        return Err(Error::config("points", format!("need at least 2 grid points, got {points}")));
    }
    Ok(())
}

/// Columns `(particles, kappa_over_lambda, real_count)`.
pub fn scan_real_count(particles: &[u32], lo: f64, hi: f64, points: usize, omega: f64, tol: &Tolerances) -> Result<Table> {
    check_range(lo, hi, points)?;
    if particles.is_empty() || particles.contains(&0) {
        return Err(Error::config("particles", "need a non-empty list of positive particle numbers"));
    }
    let ratios = linspace(lo, hi, points);
    let mut t = Table::new(&["particles", "kappa_over_lambda", "real_count"]);
    for &n in particles {
        let counts = count_real_on_family(&oat_family(n, omega, 1.0), &ratios, tol)?;
        for (r, c) in ratios.iter().zip(counts) {
            t.push(vec![n.to_string(), fmt_f64(*r), c.to_string()]);
        }
    }
    Ok(t)
}

/// Columns `(kappa_over_lambda, eigenvalue_re, eigenvalue_im, index_a, index_b, block_size)`.
pub fn locate_eps_table(particles: u32, lo: f64, hi: f64, grid: usize, omega: f64, tol: &Tolerances) -> Result<Table> {
    check_range(lo, hi, grid.max(2))?;
    if particles == 0 {
        return Err(Error::config("particles", "must be positive"));
    }
    let eps = locate_exceptional_points(&oat_family(particles, omega, 1.0), lo, hi, grid, tol)?;
    let mut t = Table::new(&["kappa_over_lambda", "eigenvalue_re", "eigenvalue_im", "index_a", "index_b", "block_size"]);
    for ep in eps {
        t.push(vec![
            fmt_f64(ep.ratio),
            fmt_f64(ep.eigenvalue.re),
            fmt_f64(ep.eigenvalue.im),
            ep.colliding.0.to_string(),
            ep.colliding.1.to_string(),
            ep.block_size.to_string(),
        ]);
    }
    Ok(t)
}

/// Eigenvalue tracks continued by nearest-neighbour matching from one grid
/// point to the next; ties go to the smaller real part.
pub fn spectrum_tracks(particles: u32, ratios: &[f64], omega: f64) -> Result<Vec<Vec<Complex64>>> {
    let family = oat_family(particles, omega, 1.0);
    let spectra: Vec<Vec<Complex64>> = ratios.par_iter().map(|&r| linalg::eig(&family(r)).map(|(v, _)| v)).collect::<Result<_>>()?;
    let mut tracks: Vec<Vec<Complex64>> = Vec::with_capacity(spectra.len());
    for values in spectra {
        let ordered = match tracks.last() {
            None => {
                let mut v = values;
                v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
                v
            }
            Some(prev) => {
                let n = prev.len();
                let mut candidates: Vec<(f64, f64, usize, usize)> = Vec::with_capacity(n * n);
                for (i, p) in prev.iter().enumerate() {
                    for (j, v) in values.iter().enumerate() {
                        candidates.push(((p - v).norm(), v.re, i, j));
                    }
                }
                candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
                let mut slot: Vec<Option<Complex64>> = vec![None; n];
                let mut taken = vec![false; n];
                for (_, _, i, j) in candidates {
                    if slot[i].is_none() && !taken[j] {
                        slot[i] = Some(values[j]);
                        taken[j] = true;
                    }
                }
                slot.into_iter().map(|s| s.expect("complete matching")).collect()
            }
        };
        tracks.push(ordered);
    }
    Ok(tracks)
}

/// Columns `(kappa_over_lambda, j, re, im)`.
pub fn spectrum_flow(particles: u32, lo: f64, hi: f64, points: usize, omega: f64) -> Result<Table> {
    check_range(lo, hi, points)?;
    if particles == 0 {
        return Err(Error::config("particles", "must be positive"));
    }
    let ratios = linspace(lo, hi, points);
    let tracks = spectrum_tracks(particles, &ratios, omega)?;
    let mut t = Table::new(&["kappa_over_lambda", "j", "re", "im"]);
    for (r, values) in ratios.iter().zip(tracks) {
        for (j, e) in values.iter().enumerate() {
            t.push(vec![fmt_f64(*r), j.to_string(), fmt_f64(e.re), fmt_f64(e.im)]);
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EpModeArg {
    Auto,
    ForceJordan,
    ForceDiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InnerArg {
    Euclidean,
    Metric,
}

#[derive(Debug, Args)]
struct Common {
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Relative |Im E| below which an eigenvalue counts as real.
    #[arg(long, global = true)]
    tol_real: Option<f64>,
    /// Matching band for conjugate partners.
    #[arg(long, global = true)]
    tol_pair: Option<f64>,
    /// Eigenvector-coalescence threshold.
    #[arg(long, global = true)]
    tol_defect: Option<f64>,
    /// Bound on the Jordan chain residual.
    #[arg(long, global = true)]
    tol_jordan: Option<f64>,
    #[arg(long, global = true, value_enum)]
    ep_mode: Option<EpModeArg>,
    /// Divide survival probabilities and expectation values by the state norm.
    #[arg(long, global = true, overrides_with = "no_normalize")]
    normalize: bool,
    /// Report raw values; survival then grows with the amplifying modes.
    #[arg(long, global = true)]
    no_normalize: bool,
    #[arg(long, global = true, value_enum)]
    inner_product: Option<InnerArg>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            tau_real: self.tol_real,
            tau_pair: self.tol_pair,
            tau_defect: self.tol_defect,
            tau_jordan: self.tol_jordan,
            ep_mode: self.ep_mode.map(|m| match m {
                EpModeArg::Auto => EpMode::Auto,
                EpModeArg::ForceJordan => EpMode::ForceJordan,
                EpModeArg::ForceDiagonal => EpMode::ForceDiagonal,
            }),
            normalize: if self.no_normalize {
                Some(false)
            } else if self.normalize {
                Some(true)
            } else {
                None
            },
            inner_product: self.inner_product.map(|i| match i {
                InnerArg::Euclidean => InnerProduct::Euclidean,
                InnerArg::Metric => InnerProduct::Metric,
            }),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nhkrein", version, about = "Non-Hermitian collective-spin dynamics under Krein-space metrics")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve a scenario file and write the requested CSV tables.
    Run {
        /// TOML scenario file.
        scenario: PathBuf,
    },
    /// Number of real eigenvalues of the dissipative OAT model over a κ/λ grid.
    ScanRealCount {
        #[arg(long, value_delimiter = ',', required = true)]
        particles: Vec<u32>,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 3.0)]
        to: f64,
        #[arg(long, default_value_t = 301)]
        points: usize,
        #[arg(long, default_value_t = REFERENCE_OMEGA, allow_hyphen_values = true)]
        omega: f64,
    },
    /// Exceptional points of the dissipative OAT model, bisection refined.
    LocateEps {
        #[arg(long)]
        particles: u32,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 0.5)]
        to: f64,
        #[arg(long, default_value_t = 1000)]
        grid: usize,
        #[arg(long, default_value_t = REFERENCE_OMEGA, allow_hyphen_values = true)]
        omega: f64,
    },
    /// Continuous eigenvalue tracks over a κ/λ grid.
    SpectrumFlow {
        #[arg(long)]
        particles: u32,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 1.0)]
        to: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long, default_value_t = REFERENCE_OMEGA, allow_hyphen_values = true)]
        omega: f64,
    },
}

fn dispatch(cli: Cli) -> Result<Vec<PathBuf>> {
    let overrides = cli.common.overrides();
    let out = cli.common.out;
    let tol = overrides.tolerances(Tolerances::default())?;
    let write = |name: &str, table: Table| -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&out)?;
        let path = out.join(name);
        table.write(&path)?;
        Ok(vec![path])
    };
    match cli.command {
        Command::Run { scenario } => {
            let record = run_scenario(&scenario, &out, &overrides)?;
            let mut files: Vec<PathBuf> = record.outputs.iter().map(PathBuf::from).collect();
            files.push(out.join("run_record.json"));
            Ok(files)
        }
        Command::ScanRealCount { particles, from, to, points, omega } => {
            write("real_count.csv", scan_real_count(&particles, from, to, points, omega, &tol)?)
        }
        Command::LocateEps { particles, from, to, grid, omega } => {
            write("exceptional_points.csv", locate_eps_table(particles, from, to, grid, omega, &tol)?)
        }
        Command::SpectrumFlow { particles, from, to, points, omega } => {
            write("spectrum_flow.csv", spectrum_flow(particles, from, to, points, omega)?)
        }
    }
}

/// Exit code for an error: 3 for numerical failures, 2 for everything the
/// caller can fix in the configuration.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(files) => {
            let mut msg = String::new();
            for f in files {
                let _ = writeln!(msg, "wrote {}", f.display());
            }
            print!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
