//! Picks the propagation mode and metric case from the spectrum and wires the
//! spectral, metric and dynamics pieces together.

use serde::{Deserialize, Serialize};

use crate::dynamics::Propagator;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::metric::{self, krein_split, AlphaPolicy, MetricCase, MetricContext, SymmetryOperator};
use crate::spectral::{classify_values, eigensystem, jordan_chains, Classification, JordanData, SpectralData, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpMode {
    /// Jordan treatment exactly when the defect detector fires.
    #[default]
    Auto,
    ForceJordan,
    ForceDiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricMode {
    #[default]
    Auto,
    #[serde(rename = "force-case-i")]
    CaseI,
    #[serde(rename = "force-case-ii")]
    CaseII,
    #[serde(rename = "force-case-iii")]
    CaseIII,
    #[serde(rename = "force-case-iv")]
    CaseIV,
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub hamiltonian: CMat,
    pub spectral: SpectralData,
    pub jordan: Option<JordanData>,
    pub symmetry: SymmetryOperator,
    pub metric: MetricContext,
    pub propagator: Propagator,
}

impl Prepared {
    pub fn classification(&self) -> Classification {
        self.spectral.classification
    }

    pub fn case(&self) -> MetricCase {
        self.metric.case()
    }
}

pub fn prepare(h: &CMat, tol: &Tolerances, ep_mode: EpMode, metric_mode: MetricMode, alpha: &AlphaPolicy) -> Result<Prepared> {
    let mut sd = eigensystem(h, tol)?;
    let use_jordan = match ep_mode {
        EpMode::Auto => sd.classification == Classification::Defective || metric_mode == MetricMode::CaseIII,
        EpMode::ForceJordan => true,
        EpMode::ForceDiagonal => false,
    };
    if use_jordan && sd.jordan.is_none() {
        sd.jordan = Some(jordan_chains(h, &sd, tol)?);
    }
    let jordan = if use_jordan { sd.jordan.clone() } else { None };

    // Diagonal treatment of a defective matrix: metric by eigenvalues alone.
    let diag_view = if !use_jordan && sd.classification == Classification::Defective {
        let (classification, pair_map) = classify_values(&sd.eigenvalues, sd.h_norm, false, tol)?;
        let mut view = sd.clone();
        view.classification = classification;
        view.pair_map = pair_map;
        view
    } else {
        sd.clone()
    };

    let symmetry = match (metric_mode, &jordan) {
        (MetricMode::CaseIII, Some(jd)) | (MetricMode::Auto, Some(jd)) => metric::symmetry_operator_jordan(jd, alpha, tol)?,
        (MetricMode::CaseIII, None) => {
            return Err(Error::config("metric_mode", "force-case-iii requires Jordan propagation (ep_mode must not be force-diagonal)"))
        }
        (MetricMode::CaseIV, Some(jd)) => metric::metric_jordan_positive(jd),
        (MetricMode::CaseI | MetricMode::CaseII, Some(_)) => {
            return Err(Error::config("metric_mode", "cases I and II need a diagonalizable spectrum; use ep_mode force-diagonal"))
        }
        (MetricMode::Auto, None) => match diag_view.classification {
            Classification::AllReal => metric::metric_case_real(&diag_view)?,
            Classification::ConjugatePairs => metric::symmetry_operator_pairs(&diag_view, alpha)?,
            _ => metric::metric_case_general_unchecked(&diag_view),
        },
        (MetricMode::CaseI, None) => metric::metric_case_real(&diag_view)?,
        (MetricMode::CaseII, None) => metric::symmetry_operator_pairs(&diag_view, alpha)?,
        (MetricMode::CaseIV, None) => metric::metric_case_general_unchecked(&diag_view),
    };
    let metric = krein_split(&symmetry)?;
    let propagator = match &jordan {
        Some(jd) => Propagator::jordan(h, jd)?,
        None => Propagator::diagonal(h, &sd)?,
    };
    Ok(Prepared { hamiltonian: h.clone(), spectral: sd, jordan, symmetry, metric, propagator })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::locate_oat_exceptional_points;
    use crate::spin::{build_hamiltonian, oat_family, ModelParams, SpinSystem, REFERENCE_OMEGA};

    fn run(h: &CMat, ep: EpMode, mm: MetricMode) -> Result<Prepared> {
        prepare(h, &Tolerances::default(), ep, mm, &AlphaPolicy::default())
    }

    #[test]
    fn auto_selects_case_by_classification() {
        let family = oat_family(4, REFERENCE_OMEGA, 1.0);
        assert_eq!(run(&family(0.05), EpMode::Auto, MetricMode::Auto).unwrap().case(), MetricCase::CaseI);
        assert_eq!(run(&family(0.2), EpMode::Auto, MetricMode::Auto).unwrap().case(), MetricCase::CaseII);
        let ep = locate_oat_exceptional_points(4, 0.3, 0.4, &Tolerances::default()).unwrap()[0];
        let p = run(&family(ep.ratio), EpMode::Auto, MetricMode::Auto).unwrap();
        assert_eq!(p.classification(), Classification::Defective);
        assert_eq!(p.case(), MetricCase::CaseIII);

        let sys = SpinSystem::from_particles(15);
        let nv = build_hamiltonian(&sys, &ModelParams::NvLipkin { epsilon: 1.0, gamma: 0.02, chi: 2.88, v: 0.26 }).unwrap();
        assert_eq!(run(&nv, EpMode::Auto, MetricMode::Auto).unwrap().case(), MetricCase::CaseIV);
    }

    #[test]
    fn forced_modes() {
        let family = oat_family(4, REFERENCE_OMEGA, 1.0);
        let p = run(&family(0.2), EpMode::ForceJordan, MetricMode::Auto).unwrap();
        assert_eq!(p.case(), MetricCase::CaseIII);
        assert!(p.jordan.as_ref().unwrap().is_diagonal());
        let p = run(&family(0.2), EpMode::Auto, MetricMode::CaseIV).unwrap();
        assert_eq!(p.case(), MetricCase::CaseIV);
        assert!(run(&family(0.2), EpMode::Auto, MetricMode::CaseI).is_err());
        assert!(run(&family(0.2), EpMode::ForceDiagonal, MetricMode::CaseIII).is_err());
    }
}
