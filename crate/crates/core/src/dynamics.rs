//! Closed-form propagation `e^{-iHt}` through the eigenbasis or the Jordan
//! form, and the coordinate chain `A_k → A_H → A_S` along a time grid.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, real, CMat, CVec, I};
use crate::metric::MetricContext;
use crate::spectral::{JordanBlock, JordanData, SpectralData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagationMode {
    Diagonal,
    Jordan,
}

#[derive(Debug, Clone)]
pub struct Propagator {
    pub mode: PropagationMode,
    /// `Υ` (diagonal mode) or `P̃` (Jordan mode).
    pub basis: CMat,
    pub basis_inv: CMat,
    pub blocks: Vec<JordanBlock>,
    max_im: f64,
    min_im: f64,
}

/// Relative reconstruction error tolerated between `H` and the supplied data.
const MISMATCH_TOL: f64 = 1e-6;

impl Propagator {
    pub fn diagonal(h: &CMat, sd: &SpectralData) -> Result<Propagator> {
        let blocks = (0..sd.dim()).map(|k| JordanBlock { eigenvalue: sd.eigenvalues[k], size: 1, start: k }).collect();
        Propagator::build(h, PropagationMode::Diagonal, sd.right.clone(), blocks)
    }

    pub fn jordan(h: &CMat, jd: &JordanData) -> Result<Propagator> {
        Propagator::build(h, PropagationMode::Jordan, jd.p_tilde.clone(), jd.blocks.clone())
    }

    fn build(h: &CMat, mode: PropagationMode, basis: CMat, blocks: Vec<JordanBlock>) -> Result<Propagator> {
        let n = basis.ncols();
        if h.nrows() != n || h.ncols() != n || basis.nrows() != n {
            return Err(Error::DimensionMismatch { expected: h.nrows(), found: n });
        }
        if blocks.iter().map(|b| b.size).sum::<usize>() != n {
            return Err(Error::InvalidInput("Jordan blocks do not cover the space".into()));
        }
        let basis_inv = linalg::inverse(&basis)?;
        let mut j = CMat::zeros(n, n);
        for b in &blocks {
            for k in 0..b.size {
                j[(b.start + k, b.start + k)] = b.eigenvalue;
                if k + 1 < b.size {
                    j[(b.start + k, b.start + k + 1)] = real(1.0);
                }
            }
        }
        let rebuilt = &basis * j * &basis_inv;
        let mismatch = linalg::fro_norm(&(rebuilt - h)) / linalg::fro_norm(h).max(f64::MIN_POSITIVE);
        if !(mismatch <= MISMATCH_TOL) {
            return Err(Error::DataMismatch(mismatch));
        }
        let max_im = blocks.iter().map(|b| b.eigenvalue.im).fold(f64::NEG_INFINITY, f64::max);
        let min_im = blocks.iter().map(|b| b.eigenvalue.im).fold(f64::INFINITY, f64::min);
        Ok(Propagator {
            mode,
            basis,
            basis_inv,
            blocks,
            max_im: if n == 0 { 0.0 } else { max_im },
            min_im: if n == 0 { 0.0 } else { min_im },
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `e^{-iJt}` scaled by `e^{-g t}`; returns the matrix and `g t`.
    ///
    /// `g` is the largest growth rate in the direction of `t`, so entries
    /// stay bounded however long the evolution runs.
    pub fn scaled_exp_j(&self, t: f64) -> (CMat, f64) {
        let g = if t >= 0.0 { self.max_im } else { self.min_im };
        let log_scale = g * t;
        let n = self.dim();
        let mut m = CMat::zeros(n, n);
        for b in &self.blocks {
            let phase = (-I * b.eigenvalue * t - real(log_scale)).exp();
            let mut term = phase;
            for p in 0..b.size {
                for r in 0..(b.size - p) {
                    m[(b.start + r, b.start + r + p)] = term;
                }
                term *= -I * t / (p as f64 + 1.0);
            }
        }
        (m, log_scale)
    }

    /// `U(t) = Υ e^{-iJt} Υ⁻¹`.
    pub fn u(&self, t: f64) -> CMat {
        let (m, log_scale) = self.scaled_exp_j(t);
        (&self.basis * m * &self.basis_inv) * real(log_scale.exp())
    }

    /// Coefficients `c̃(t)` in the propagator basis, scaled by `e^{-log_scale}`.
    pub fn coefficients(&self, c0: &CVec, t: f64) -> (CVec, f64) {
        let (m, log_scale) = self.scaled_exp_j(t);
        (m * c0, log_scale)
    }
}

pub fn build_propagator(h: &CMat, sd: &SpectralData, jd: Option<&JordanData>) -> Result<Propagator> {
    match jd {
        Some(jd) => Propagator::jordan(h, jd),
        None => Propagator::diagonal(h, sd),
    }
}

/// Time series of an evolved state. Growing or decaying components are
/// factored out: the physical state at `times[k]` is
/// `states[k]·e^{log_scale[k]}`, and likewise for both coefficient sets.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub initial: CVec,
    /// `c̃_α(t)` in `A_H` (or on the Jordan chains).
    pub coeffs_h: Vec<CVec>,
    /// Coordinates in `A_S`, `Υ′⁻¹ c̃(t)`.
    pub coeffs_s: Vec<CVec>,
    /// States in `A_k`.
    pub states: Vec<CVec>,
    pub log_scale: Vec<f64>,
    /// `⟨I(t)|I(t)⟩_S`.
    pub s_norms: Vec<f64>,
}

impl EvolutionResult {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The unscaled state at sample `k`.
    pub fn state(&self, k: usize) -> CVec {
        &self.states[k] * real(self.log_scale[k].exp())
    }
}

pub fn evolve(initial: &CVec, prop: &Propagator, ctx: &MetricContext, times: &[f64]) -> Result<EvolutionResult> {
    let n = prop.dim();
    if initial.len() != n || ctx.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: initial.len() });
    }
    if initial.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::InvalidInput("initial state is zero".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("time grid contains non-finite values".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("time grid must be strictly ascending".into()));
    }
    let c0 = &prop.basis_inv * initial;
    let samples: Vec<(CVec, CVec, CVec, f64, f64)> = times
        .par_iter()
        .map(|&t| {
            let (c, log_scale) = prop.coefficients(&c0, t);
            let state = if t == 0.0 { initial.clone() } else { &prop.basis * &c };
            let coeffs_s = &ctx.r_inv * &state;
            let s_scaled = state.dotc(&(&ctx.s_k * &state)).re;
            let s_norm = s_scaled * (2.0 * log_scale).exp();
            (c, coeffs_s, state, log_scale, s_norm)
        })
        .collect();

    let mut out = EvolutionResult {
        times: times.to_vec(),
        initial: initial.clone(),
        coeffs_h: Vec::with_capacity(times.len()),
        coeffs_s: Vec::with_capacity(times.len()),
        states: Vec::with_capacity(times.len()),
        log_scale: Vec::with_capacity(times.len()),
        s_norms: Vec::with_capacity(times.len()),
    };
    for (c, cs, state, log_scale, s_norm) in samples {
        out.coeffs_h.push(c);
        out.coeffs_s.push(cs);
        out.states.push(state);
        out.log_scale.push(log_scale);
        out.s_norms.push(s_norm);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerProduct {
    #[default]
    Euclidean,
    Metric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurvivalOptions {
    pub inner: InnerProduct,
    /// Divide by the norms of both states.
    pub normalize: bool,
}

impl Default for SurvivalOptions {
    fn default() -> Self {
        SurvivalOptions { inner: InnerProduct::Euclidean, normalize: true }
    }
}

/// `p(t) = |⟨I|I(t)⟩|²`, optionally divided by `‖I(t)‖²` (always by `‖I‖⁴`
/// so that `p(0) = 1`).
pub fn survival_probability(result: &EvolutionResult, ctx: &MetricContext, opts: SurvivalOptions) -> Vec<f64> {
    let metric = |f: &CVec, g: &CVec| -> Complex64 {
        match opts.inner {
            InnerProduct::Euclidean => f.dotc(g),
            InnerProduct::Metric => f.dotc(&(&ctx.s_k * g)),
        }
    };
    let init = &result.initial;
    let n0 = metric(init, init).re;
    result
        .states
        .iter()
        .zip(&result.log_scale)
        .zip(&result.times)
        .map(|((state, &log_scale), &t)| {
            if t == 0.0 {
                return 1.0;
            }
            let overlap = metric(init, state).norm_sqr();
            if opts.normalize {
                overlap / (n0 * metric(state, state).re)
            } else {
                overlap * (2.0 * log_scale).exp() / (n0 * n0)
            }
        })
        .collect()
}
