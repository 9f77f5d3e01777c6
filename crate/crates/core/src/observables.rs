//! Metric-consistent expectation values, mean spin and Kitagawa–Ueda
//! squeezing in the minimal-variance frame.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, real, CMat, CVec};
use crate::metric::MetricContext;
use crate::spin::SpinSystem;

/// `⟨I|ô I⟩_S`, evaluated through the `A_S` coordinates and the
/// `D`-weighted observable. With `normalize` the value is divided by the
/// same form with `ô = 1`.
pub fn expectation(state: &CVec, obs: &CMat, ctx: &MetricContext, normalize: bool) -> Result<f64> {
    let o = ctx.transform_observable(obs)?;
    expectation_transformed(state, &o, linalg::fro_norm(obs), ctx, normalize)
}

fn expectation_transformed(state: &CVec, o: &CMat, obs_norm: f64, ctx: &MetricContext, normalize: bool) -> Result<f64> {
    let f = ctx.coordinates(state)?;
    let raw = ctx.weighted_form(&f, o, &f);
    let scale = raw.norm().max(obs_norm * state.norm_squared());
    if raw.im.abs() > 1e-8 * scale {
        return Err(Error::ImaginaryExpectation { real: raw.re, imag: raw.im });
    }
    if !normalize {
        return Ok(raw.re);
    }
    // Same chain with the identity: `[1]_{A_S} = R†R`.
    let x = ctx.to_s_basis(state)?;
    let norm = x.dotc(&(ctx.r.adjoint() * (&ctx.r * &x))).re;
    if !(norm > 0.0) {
        return Err(Error::InvalidInput("state has zero norm".into()));
    }
    Ok(raw.re / norm)
}

/// Spin operators and their symmetrized products, transformed once per metric.
pub struct SpinMoments<'a> {
    ctx: &'a MetricContext,
    first: [CMat; 3],
    second: [[CMat; 3]; 3],
    norms: [f64; 3],
}

impl<'a> SpinMoments<'a> {
    pub fn new(sys: &SpinSystem, ctx: &'a MetricContext) -> Result<SpinMoments<'a>> {
        let s = sys.components();
        let first = [ctx.transform_observable(s[0])?, ctx.transform_observable(s[1])?, ctx.transform_observable(s[2])?];
        let sym = |a: usize, b: usize| -> Result<CMat> {
            let p = s[a] * s[b];
            ctx.transform_observable(&((&p + p.adjoint()) * real(0.5)))
        };
        let second = [[sym(0, 0)?, sym(0, 1)?, sym(0, 2)?], [sym(1, 0)?, sym(1, 1)?, sym(1, 2)?], [sym(2, 0)?, sym(2, 1)?, sym(2, 2)?]];
        let norms = [linalg::fro_norm(s[0]), linalg::fro_norm(s[1]), linalg::fro_norm(s[2])];
        Ok(SpinMoments { ctx, first, second, norms })
    }

    /// Normalized `⟨S_x⟩, ⟨S_y⟩, ⟨S_z⟩`.
    pub fn mean_spin(&self, state: &CVec) -> Result<[f64; 3]> {
        let mut m = [0.0; 3];
        for (k, slot) in m.iter_mut().enumerate() {
            *slot = expectation_transformed(state, &self.first[k], self.norms[k], self.ctx, true)?;
        }
        Ok(m)
    }

    /// Normalized `½⟨S_a S_b + S_b S_a⟩`.
    pub fn second_moments(&self, state: &CVec) -> Result<[[f64; 3]; 3]> {
        let mut m = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in a..3 {
                let v = expectation_transformed(state, &self.second[a][b], self.norms[a] * self.norms[b], self.ctx, true)?;
                m[a][b] = v;
                m[b][a] = v;
            }
        }
        Ok(m)
    }

    pub fn report(&self, state: &CVec) -> Result<SqueezingReport> {
        squeezing_from_moments(self.mean_spin(state)?, self.second_moments(state)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqueezingReport {
    /// Rows `n_x′`, `n_y′`, `n_z′`.
    pub frame: [[f64; 3]; 3],
    pub mean_spin: [f64; 3],
    pub var_x: f64,
    pub var_y: f64,
    pub zeta2_x: f64,
    pub zeta2_y: f64,
    pub zeta2_x_db: f64,
    pub zeta2_y_db: f64,
    /// `Δ²S_x′ Δ²S_y′ / (¼|⟨S_z′⟩|²)`.
    pub uncertainty_product: f64,
}

pub fn squeezing_report(state: &CVec, ctx: &MetricContext, sys: &SpinSystem) -> Result<SqueezingReport> {
    SpinMoments::new(sys, ctx)?.report(state)
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn quad(m: &[[f64; 3]; 3], u: [f64; 3], v: [f64; 3]) -> f64 {
    (0..3).map(|i| (0..3).map(|j| u[i] * m[i][j] * v[j]).sum::<f64>()).sum()
}

/// Orthonormal transverse pair `(n1, n2)` for the mean-spin direction `nz`.
pub fn transverse_seed(nz: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let mut seed = sub([0.0, 0.0, 1.0], scale(nz, nz[2]));
    let mut len = dot(seed, seed).sqrt();
    if len < 1e-8 {
        seed = sub([1.0, 0.0, 0.0], scale(nz, nz[0]));
        len = dot(seed, seed).sqrt();
    }
    let n1 = scale(seed, 1.0 / len);
    (n1, cross(nz, n1))
}

/// Variance of `S·u` given mean and symmetrized second moments.
pub fn variance_along(mean: [f64; 3], second: &[[f64; 3]; 3], u: [f64; 3]) -> f64 {
    quad(second, u, u) - dot(mean, u).powi(2)
}

pub fn squeezing_from_moments(mean: [f64; 3], second: [[f64; 3]; 3]) -> Result<SqueezingReport> {
    let length = dot(mean, mean).sqrt();
    if !(length > 1e-10) {
        return Err(Error::VanishingMeanSpin(length));
    }
    let nz = scale(mean, 1.0 / length);
    let (n1, n2) = transverse_seed(nz);
    let cov = |u: [f64; 3], v: [f64; 3]| quad(&second, u, v) - dot(mean, u) * dot(mean, v);
    let (a, b, c) = (cov(n1, n1), cov(n1, n2), cov(n2, n2));
    let half_sum = 0.5 * (a + c);
    let radius = (0.25 * (a - c).powi(2) + b * b).sqrt();
    let (var_x, var_y) = (half_sum - radius, half_sum + radius);
    // Angle of the major axis; the minor one sits a quarter turn away.
    let theta = 0.5 * (2.0 * b).atan2(a - c) + std::f64::consts::FRAC_PI_2;
    let nx =
        [theta.cos() * n1[0] + theta.sin() * n2[0], theta.cos() * n1[1] + theta.sin() * n2[1], theta.cos() * n1[2] + theta.sin() * n2[2]];
    let ny = cross(nz, nx);
    let zeta2_x = 2.0 * var_x / length;
    let zeta2_y = 2.0 * var_y / length;
    Ok(SqueezingReport {
        frame: [nx, ny, nz],
        mean_spin: mean,
        var_x,
        var_y,
        zeta2_x,
        zeta2_y,
        zeta2_x_db: 10.0 * zeta2_x.log10(),
        zeta2_y_db: 10.0 * zeta2_y.log10(),
        uncertainty_product: var_x * var_y / (0.25 * length * length),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UncertaintyCheck {
    pub satisfies_bound: bool,
    pub is_intelligent: bool,
}

pub const DEFAULT_BOUND_TOL: f64 = 1e-9;
pub const DEFAULT_INTELLIGENT_TOL: f64 = 1e-2;

/// `ζ²_x′ < 1` is tested as `ζ²_x′ < 1 − tol`, so a coherent state with
/// roundoff below one is not reported as squeezed.
pub fn uncertainty_check(report: &SqueezingReport, tol: f64, tol_intelligent: f64) -> UncertaintyCheck {
    UncertaintyCheck {
        satisfies_bound: report.uncertainty_product >= 1.0 - tol,
        is_intelligent: (report.uncertainty_product - 1.0).abs() < tol_intelligent && report.zeta2_x < 1.0 - tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{krein_split, MetricCase, SymmetryOperator};
    use crate::spin::coherent_spin_state;

    fn euclidean(n: usize) -> MetricContext {
        krein_split(&SymmetryOperator::from_matrix(CMat::identity(n, n), MetricCase::CaseI)).unwrap()
    }

    #[test]
    fn identity_expectation_is_one() {
        let ctx =
            krein_split(&SymmetryOperator::from_matrix(linalg::diag(&[real(2.0), real(-0.5), real(1.5)]), MetricCase::CaseII)).unwrap();
        let f = CVec::from_vec(vec![real(0.3), linalg::c(0.1, -2.0), real(1.0)]);
        let v = expectation(&f, &CMat::identity(3, 3), &ctx, true).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn coherent_state_geometry() {
        let sys = SpinSystem::from_particles(6);
        let ctx = euclidean(7);
        for theta in [0.3, 1.1, 2.5] {
            let css = coherent_spin_state(&sys, theta, 0.0).unwrap();
            let sz = expectation(&css.amplitudes, sys.sz(), &ctx, true).unwrap();
            assert!((sz + 3.0 * theta.cos()).abs() < 1e-12);
            let rep = squeezing_report(&css.amplitudes, &ctx, &sys).unwrap();
            assert!((rep.zeta2_x - 1.0).abs() < 1e-10 && (rep.zeta2_y - 1.0).abs() < 1e-10);
            assert!((rep.uncertainty_product - 1.0).abs() < 1e-10);
            let check = uncertainty_check(&rep, DEFAULT_BOUND_TOL, DEFAULT_INTELLIGENT_TOL);
            assert!(check.satisfies_bound && !check.is_intelligent);
        }
    }

    #[test]
    fn frame_is_orthonormal_and_minimal() {
        let mean = [0.3, -1.2, 2.0];
        let second = [[1.1, 0.2, -0.3], [0.2, 2.4, -1.9], [-0.3, -1.9, 4.6]];
        let rep = squeezing_from_moments(mean, second).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot(rep.frame[i], rep.frame[j]) - expected).abs() < 1e-12);
            }
        }
        assert!(rep.var_x <= rep.var_y);
        let (n1, n2) = transverse_seed(rep.frame[2]);
        for k in 0..36 {
            let a = k as f64 * std::f64::consts::PI / 36.0;
            let u = [a.cos() * n1[0] + a.sin() * n2[0], a.cos() * n1[1] + a.sin() * n2[1], a.cos() * n1[2] + a.sin() * n2[2]];
            assert!(rep.var_x <= variance_along(mean, &second, u) + 1e-10);
        }
        assert!((variance_along(mean, &second, rep.frame[0]) - rep.var_x).abs() < 1e-10);
    }

    #[test]
    fn vanishing_mean_spin_is_an_error() {
        let err = squeezing_from_moments([0.0; 3], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::VanishingMeanSpin(_)));
    }

    #[test]
    fn product_above_one_is_not_intelligent() {
        let rep = SqueezingReport {
            frame: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            mean_spin: [0.0, 0.0, 2.0],
            var_x: 0.75,
            var_y: 2.0,
            zeta2_x: 0.75,
            zeta2_y: 2.0,
            zeta2_x_db: 10.0 * 0.75f64.log10(),
            zeta2_y_db: 10.0 * 2.0f64.log10(),
            uncertainty_product: 1.5,
        };
        let check = uncertainty_check(&rep, DEFAULT_BOUND_TOL, DEFAULT_INTELLIGENT_TOL);
        assert!(check.satisfies_bound && !check.is_intelligent);
    }

    #[test]
    fn non_hermitian_observable_rejected() {
        let ctx = euclidean(2);
        let obs = CMat::from_row_slice(2, 2, &[real(0.0), real(1.0), real(0.0), real(0.0)]);
        let f = CVec::from_vec(vec![real(1.0), real(0.0)]);
        assert!(matches!(expectation(&f, &obs, &ctx, true), Err(Error::NonHermitianObservable(_))));
    }
}
