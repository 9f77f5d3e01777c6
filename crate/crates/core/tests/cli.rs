use std::fs;
use std::path::Path;

use nhkrein::cli::{self, locate_eps_table, run_scenario_text, scan_real_count, spectrum_flow, Overrides, Table};
use nhkrein::spectral::{eigensystem, Classification, Tolerances};
use nhkrein::spin::{build_hamiltonian, ModelParams, SpinSystem, REFERENCE_OMEGA};

const STRONG: &str = r#"
schema_version = 1

[model]
kind = "dissipative_oat"
particles = 10
kappa_over_lambda = 1.5

[initial]
theta0_over_pi = 0.25
phi0 = 0.0

[time]
start = 0.0
end = 40.0
points = 201

[run]
outputs = ["squeezing", "spin_means", "survival", "norms", "spectrum"]
"#;

fn scenario_with(outputs: &str) -> String {
    STRONG.replace(r#"outputs = ["squeezing", "spin_means", "survival", "norms", "spectrum"]"#, &format!("outputs = {outputs}"))
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn identical_scenarios_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_scenario_text(STRONG, "a.toml", a.path(), &Overrides::default()).unwrap();
    run_scenario_text(STRONG, "b.toml", b.path(), &Overrides::default()).unwrap();
    for name in ["squeezing.csv", "spin_means.csv", "survival.csv", "norms.csv", "spectrum.csv"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
}

#[test]
fn every_emitted_file_is_recorded_and_has_one_row_per_time() {
    let dir = tempfile::tempdir().unwrap();
    let record = run_scenario_text(STRONG, "strong.toml", dir.path(), &Overrides::default()).unwrap();
    assert_eq!(record.outputs.len(), 5);
    for path in &record.outputs {
        let (header, rows) = read_csv(Path::new(path));
        if path.ends_with("spectrum.csv") {
            assert_eq!(header, ["j", "re", "im", "is_real"]);
            assert_eq!(rows.len(), 11);
        } else {
            assert_eq!(header[0], "t");
            assert_eq!(rows.len(), 201);
        }
    }
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run_record.json")).unwrap()).unwrap();
    assert_eq!(json["classification"], "conjugate_pairs");
    assert_eq!(json["metric_case"], "case_ii");
    assert_eq!(json["scenario_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn recorded_classification_matches_fresh_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let record = run_scenario_text(STRONG, "strong.toml", dir.path(), &Overrides::default()).unwrap();
    let sys = SpinSystem::from_particles(10);
    let h = build_hamiltonian(&sys, &ModelParams::oat_with_ratio(REFERENCE_OMEGA, 1.0, 1.5)).unwrap();
    assert_eq!(record.classification, eigensystem(&h, &Tolerances::default()).unwrap().classification);
    assert_eq!(record.classification, Classification::ConjugatePairs);
}

#[test]
fn strong_dissipation_ends_intelligent() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario_text(STRONG, "strong.toml", dir.path(), &Overrides::default()).unwrap();
    let (header, rows) = read_csv(&dir.path().join("squeezing.csv"));
    let col = header.iter().position(|h| h == "is_intelligent").unwrap();
    assert!(rows[rows.len() - 20..].iter().all(|r| r[col] == 1.0));
    assert_eq!(rows[0][col], 0.0);
}

#[test]
fn empty_outputs_write_only_the_record() {
    let dir = tempfile::tempdir().unwrap();
    let record = run_scenario_text(&scenario_with("[]"), "empty.toml", dir.path(), &Overrides::default()).unwrap();
    assert!(record.outputs.is_empty());
    let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, ["run_record.json"]);
}

#[test]
fn raw_norms_grow_while_normalized_survival_is_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let overrides = Overrides { normalize: Some(false), ..Overrides::default() };
    run_scenario_text(&scenario_with(r#"["norms", "survival"]"#), "x.toml", dir.path(), &overrides).unwrap();
    let (_, norms) = read_csv(&dir.path().join("norms.csv"));
    assert!(norms.last().unwrap()[3] > 1e6);
    let dir2 = tempfile::tempdir().unwrap();
    run_scenario_text(&scenario_with(r#"["survival"]"#), "x.toml", dir2.path(), &Overrides::default()).unwrap();
    let (_, p) = read_csv(&dir2.path().join("survival.csv"));
    assert!(p.iter().all(|r| (0.0..=1.0 + 1e-12).contains(&r[1])));
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = STRONG.replace("points = 201", "points = 1");
    let err = run_scenario_text(&bad, "bad.toml", dir.path(), &Overrides::default()).unwrap_err();
    assert!(err.to_string().contains("time.points"), "{err}");
    assert_eq!(cli::exit_code(&err), 2);

    let unknown = STRONG.replace("phi0 = 0.0", "phi0 = 0.0\nphi1 = 2.0");
    let err = run_scenario_text(&unknown, "bad.toml", dir.path(), &Overrides::default()).unwrap_err();
    assert!(err.to_string().contains("phi1"), "{err}");
}

#[test]
fn exit_codes_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(cli::main_with(["nhkrein", "--out", out, "run", "/nonexistent/scenario.toml"]), 2);
    assert_eq!(cli::main_with(["nhkrein", "bogus-command"]), 2);
    assert_eq!(cli::main_with(["nhkrein", "--out", out, "locate-eps", "--particles", "4"]), 0);
    let (header, rows) = read_csv(&dir.path().join("exceptional_points.csv"));
    assert_eq!(header[0], "kappa_over_lambda");
    assert_eq!(rows.len(), 2);

    // A Jordan residual bound nobody can meet is a numerical failure.
    let scenario = dir.path().join("ep.toml");
    fs::write(&scenario, STRONG.replace("kappa_over_lambda = 1.5", "kappa_over_lambda = 0.375").replace("particles = 10", "particles = 4"))
        .unwrap();
    let code = cli::main_with(["nhkrein", "--out", out, "--tol-jordan", "1e-30", "run", scenario.to_str().unwrap()]);
    assert_eq!(code, 3);
}

#[test]
fn scan_subcommand_writes_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = cli::main_with(["nhkrein", "--out", out, "scan-real-count", "--particles", "3,4", "--to", "1", "--points", "11"]);
    assert_eq!(code, 0);
    let (header, rows) = read_csv(&dir.path().join("real_count.csv"));
    assert_eq!(header, ["particles", "kappa_over_lambda", "real_count"]);
    assert_eq!(rows.len(), 22);
}

fn transitions(t: &Table, n: u32) -> Vec<(f64, f64)> {
    let r = t.column("kappa_over_lambda").unwrap();
    let c = t.column("real_count").unwrap();
    let p = t.column("particles").unwrap();
    (1..r.len()).filter(|&k| p[k] == n as f64 && p[k - 1] == n as f64 && c[k] < c[k - 1]).map(|k| (r[k - 1], r[k])).collect()
}

#[test]
fn located_eps_sit_on_real_count_drops() {
    let tol = Tolerances::default();
    let scan = scan_real_count(&[10], 0.0, 0.6, 601, REFERENCE_OMEGA, &tol).unwrap();
    let drops = transitions(&scan, 10);
    let eps = locate_eps_table(10, 0.0, 0.6, 1000, REFERENCE_OMEGA, &tol).unwrap();
    let ratios = eps.column("kappa_over_lambda").unwrap();
    assert!(!drops.is_empty());
    for (lo, hi) in drops {
        assert!(ratios.iter().any(|&r| r >= lo - 1e-6 && r <= hi + 1e-6), "no EP in [{lo}, {hi}]: {ratios:?}");
    }
}

#[test]
fn spectrum_flow_tracks() {
    let t = spectrum_flow(4, 0.0, 0.5, 501, REFERENCE_OMEGA).unwrap();
    let r = t.column("kappa_over_lambda").unwrap();
    let im = t.column("im").unwrap();
    for (k, &ratio) in r.iter().enumerate() {
        if ratio < 0.0739 {
            assert!(im[k].abs() < 1e-9);
        }
    }
    // Just past the second EP the outgoing pair sits near ±1.34i.
    let near: Vec<f64> = (0..r.len()).filter(|&k| (r[k] - 0.376).abs() < 1e-9).map(|k| im[k]).collect();
    assert!(near.iter().any(|&y| (y - 1.34).abs() < 0.01));
    assert!(near.iter().any(|&y| (y + 1.34).abs() < 0.01));
}
