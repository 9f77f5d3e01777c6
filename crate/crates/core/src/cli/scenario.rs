//! Declarative run description, parsed from TOML.
//!
//! ```toml
//! schema_version = 1
//!
//! [model]
//! kind = "dissipative_oat"      # or "nv_lipkin"
//! particles = 10
//! omega = -5.0
//! lambda = 1.0
//! kappa_over_lambda = 1.5
//!
//! [initial]
//! theta0_over_pi = 0.25         # or theta0 in radians
//! phi0 = 0.0
//!
//! [time]
//! start = 0.0
//! end = 40.0
//! points = 401
//!
//! [run]
//! outputs = ["squeezing", "spin_means"]
//! ```

use serde::{Deserialize, Serialize};

use crate::dynamics::InnerProduct;
use crate::error::{Error, Result};
use crate::metric::AlphaPolicy;
use crate::pipeline::{EpMode, MetricMode};
use crate::spectral::Tolerances;
use crate::spin::{ModelParams, REFERENCE_OMEGA};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Survival,
    SpinMeans,
    Squeezing,
    Spectrum,
    Norms,
}

impl OutputKind {
    pub fn file_name(self) -> &'static str {
        match self {
            OutputKind::Survival => "survival.csv",
            OutputKind::SpinMeans => "spin_means.csv",
            OutputKind::Squeezing => "squeezing.csv",
            OutputKind::Spectrum => "spectrum.csv",
            OutputKind::Norms => "norms.csv",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema_version: Option<u32>,
    model: Option<RawModel>,
    initial: Option<RawInitial>,
    time: Option<RawTime>,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    tolerances: Tolerances,
    alpha: Option<RawAlpha>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: String,
    particles: Option<i64>,
    omega: Option<f64>,
    lambda: Option<f64>,
    kappa_over_lambda: Option<f64>,
    kappa: Option<f64>,
    epsilon: Option<f64>,
    gamma: Option<f64>,
    chi: Option<f64>,
    v: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    theta0: Option<f64>,
    theta0_over_pi: Option<f64>,
    #[serde(default)]
    phi0: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    #[serde(default)]
    start: f64,
    end: f64,
    points: i64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    #[serde(default)]
    metric_mode: MetricMode,
    #[serde(default)]
    ep_mode: EpMode,
    #[serde(default)]
    outputs: Vec<OutputKind>,
    normalize: Option<bool>,
    #[serde(default)]
    inner_product: InnerProduct,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlpha {
    diag_re: f64,
    #[serde(default)]
    diag_im: f64,
    #[serde(default)]
    pair_re: f64,
    pair_im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl TimeGrid {
    pub fn samples(&self) -> Vec<f64> {
        let step = (self.end - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|k| if k + 1 == self.points { self.end } else { self.start + step * k as f64 }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub schema_version: u32,
    pub model: ModelParams,
    pub particles: u32,
    pub theta0: f64,
    pub phi0: f64,
    pub time: TimeGrid,
    pub metric_mode: MetricMode,
    pub ep_mode: EpMode,
    pub outputs: Vec<OutputKind>,
    pub normalize: bool,
    pub inner_product: InnerProduct,
    pub tolerances: Tolerances,
    pub alpha: AlphaPolicy,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| format!("line {}", text[..s.start.min(text.len())].lines().count().max(1)))
                .unwrap_or_else(|| "scenario".into());
            Error::config(field, e.message().to_string())
        })?;
        Scenario::from_raw(raw)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Scenario> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), format!("cannot read scenario: {e}")))?;
        Scenario::from_toml(&text)
    }

    fn from_raw(raw: RawScenario) -> Result<Scenario> {
        let schema_version = raw.schema_version.ok_or_else(|| Error::config("schema_version", "missing"))?;
        if schema_version != SCHEMA_VERSION {
            return Err(Error::config("schema_version", format!("unsupported version {schema_version}, expected {SCHEMA_VERSION}")));
        }

        let m = raw.model.ok_or_else(|| Error::config("model", "missing section"))?;
        let particles = m.particles.ok_or_else(|| Error::config("model.particles", "missing"))?;
        if particles < 1 || particles > 4096 {
            return Err(Error::config("model.particles", format!("must be between 1 and 4096, got {particles}")));
        }
        let need = |v: Option<f64>, name: &str| -> Result<f64> {
            let x = v.ok_or_else(|| Error::config(format!("model.{name}"), "missing"))?;
            if !x.is_finite() {
                return Err(Error::config(format!("model.{name}"), "must be finite"));
            }
            Ok(x)
        };
        let model = match m.kind.as_str() {
            "dissipative_oat" => {
                let omega = need(m.omega.or(Some(REFERENCE_OMEGA)), "omega")?;
                let lambda = need(m.lambda.or(Some(1.0)), "lambda")?;
                let kappa = match (m.kappa_over_lambda, m.kappa) {
                    (Some(_), Some(_)) => return Err(Error::config("model.kappa", "give either kappa or kappa_over_lambda, not both")),
                    (Some(r), None) => {
                        if lambda == 0.0 {
                            return Err(Error::config("model.lambda", "must be nonzero when kappa_over_lambda is used"));
                        }
                        need(Some(r), "kappa_over_lambda")? * lambda
                    }
                    (None, Some(k)) => need(Some(k), "kappa")?,
                    (None, None) => return Err(Error::config("model.kappa_over_lambda", "missing")),
                };
                ModelParams::DissipativeOat { omega, lambda, kappa }
            }
            "nv_lipkin" => ModelParams::NvLipkin {
                epsilon: need(m.epsilon, "epsilon")?,
                gamma: need(m.gamma, "gamma")?,
                chi: need(m.chi, "chi")?,
                v: need(m.v, "v")?,
            },
            other => return Err(Error::config("model.kind", format!("unknown model `{other}` (expected dissipative_oat or nv_lipkin)"))),
        };

        let init = raw.initial.ok_or_else(|| Error::config("initial", "missing section"))?;
        let theta0 = match (init.theta0, init.theta0_over_pi) {
            (Some(t), None) => t,
            (None, Some(t)) => t * std::f64::consts::PI,
            (Some(_), Some(_)) => return Err(Error::config("initial.theta0", "give either theta0 or theta0_over_pi, not both")),
            (None, None) => return Err(Error::config("initial.theta0", "missing")),
        };
        if !(0.0..=std::f64::consts::PI).contains(&theta0) {
            return Err(Error::config("initial.theta0", format!("must lie in [0, pi], got {theta0}")));
        }
        if !init.phi0.is_finite() {
            return Err(Error::config("initial.phi0", "must be finite"));
        }

        let t = raw.time.ok_or_else(|| Error::config("time", "missing section"))?;
        if t.points < 2 {
            return Err(Error::config("time.points", format!("must be at least 2, got {}", t.points)));
        }
        if !(t.start.is_finite() && t.end.is_finite()) || t.end <= t.start {
            return Err(Error::config("time.end", format!("must exceed time.start ({} <= {})", t.end, t.start)));
        }

        let mut outputs = raw.run.outputs.clone();
        outputs.sort();
        outputs.dedup();

        raw.tolerances.validate().map_err(|e| Error::config("tolerances", e.to_string()))?;
        let alpha = match raw.alpha {
            Some(a) => AlphaPolicy {
                alpha_diag: num_complex::Complex64::new(a.diag_re, a.diag_im),
                alpha_pair: num_complex::Complex64::new(a.pair_re, a.pair_im),
            },
            None => AlphaPolicy::default(),
        };
        alpha.validate().map_err(|e| Error::config("alpha", e.to_string()))?;

        Ok(Scenario {
            schema_version,
            model,
            particles: particles as u32,
            theta0,
            phi0: init.phi0,
            time: TimeGrid { start: t.start, end: t.end, points: t.points as usize },
            metric_mode: raw.run.metric_mode,
            ep_mode: raw.run.ep_mode,
            outputs,
            normalize: raw.run.normalize.unwrap_or(true),
            inner_product: raw.run.inner_product,
            tolerances: raw.tolerances,
            alpha,
        })
    }
}
