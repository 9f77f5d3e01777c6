//! Collective-spin operators, the two model Hamiltonians, coherent spin
//! states and the PT transform on the (2S+1)-dimensional space.
//!
//! Basis convention: `|k⟩`, `k = 0..=2S`, is the `S_z` eigenstate with
//! eigenvalue `k - S` (ascending). The ladder operator carries the phase
//! `S₊|k⟩ = -√(S(S+1) - m(m+1)) |k+1⟩`, which is the convention under which the
//! coherent state `Σ_k z^k C(2S,k)^{1/2} |k⟩` with `z = e^{-iφ₀} tan(θ₀/2)`
//! satisfies `(S⃗·n⃗₀)|I⟩ = -S|I⟩` along `n⃗₀ = (sinθ₀, 0, cosθ₀)` for `φ₀ = 0`.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigen, real, CMat, CVec, I};

#[derive(Debug, Clone)]
pub struct SpinSystem {
    two_s: u32,
    sx: CMat,
    sy: CMat,
    sz: CMat,
}

impl SpinSystem {
    /// Builds the spin-`s` representation; `2s` must be a non-negative integer.
    pub fn new(s: f64) -> Result<Self> {
        let two_s = 2.0 * s;
        if !two_s.is_finite() || two_s < 0.0 || (two_s - two_s.round()).abs() > 1e-12 {
            return Err(Error::InvalidSpin(s));
        }
        Ok(Self::from_two_s(two_s.round() as u32))
    }

    /// `N` collective spin-1/2 particles, `S = N/2`.
    pub fn from_particles(n: u32) -> Self {
        Self::from_two_s(n)
    }

    pub fn from_two_s(two_s: u32) -> Self {
        let dim = two_s as usize + 1;
        let s = two_s as f64 / 2.0;
        let mut sz = CMat::zeros(dim, dim);
        let mut s_plus = CMat::zeros(dim, dim);
        for k in 0..dim {
            let m = k as f64 - s;
            sz[(k, k)] = real(m);
            if k + 1 < dim {
                s_plus[(k + 1, k)] = real(-(s * (s + 1.0) - m * (m + 1.0)).sqrt());
            }
        }
        let s_minus = s_plus.adjoint();
        let sx = (&s_plus + &s_minus) * real(0.5);
        let sy = (&s_plus - &s_minus) * c(0.0, -0.5);
        SpinSystem { two_s, sx, sy, sz }
    }

    pub fn spin(&self) -> f64 {
        self.two_s as f64 / 2.0
    }

    pub fn two_s(&self) -> u32 {
        self.two_s
    }

    pub fn particles(&self) -> u32 {
        self.two_s
    }

    pub fn dim(&self) -> usize {
        self.two_s as usize + 1
    }

    pub fn sx(&self) -> &CMat {
        &self.sx
    }

    pub fn sy(&self) -> &CMat {
        &self.sy
    }

    pub fn sz(&self) -> &CMat {
        &self.sz
    }

    pub fn components(&self) -> [&CMat; 3] {
        [&self.sx, &self.sy, &self.sz]
    }

    /// `S⃗·n⃗` for a (not necessarily unit) real direction.
    pub fn along(&self, n: [f64; 3]) -> CMat {
        &self.sx * real(n[0]) + &self.sy * real(n[1]) + &self.sz * real(n[2])
    }

    pub fn identity(&self) -> CMat {
        CMat::identity(self.dim(), self.dim())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    /// `-(ω/2) - (λ/2) S_z² + 2iκ S_x`
    DissipativeOat { omega: f64, lambda: f64, kappa: f64 },
    /// `(ε - iγ) S_z + (χ/2) S_z² + V (S_x² - S_y²)`, parameters in MHz.
    NvLipkin { epsilon: f64, gamma: f64, chi: f64, v: f64 },
}

impl ModelParams {
    pub fn oat_with_ratio(omega: f64, lambda: f64, kappa_over_lambda: f64) -> Self {
        ModelParams::DissipativeOat { omega, lambda, kappa: kappa_over_lambda * lambda }
    }

    pub fn validate(&self) -> Result<()> {
        let values: &[f64] = match self {
            ModelParams::DissipativeOat { omega, lambda, kappa } => &[*omega, *lambda, *kappa],
            ModelParams::NvLipkin { epsilon, gamma, chi, v } => &[*epsilon, *gamma, *chi, *v],
        };
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("model parameters must be finite".into()));
        }
        Ok(())
    }

    /// `κ/λ` for the dissipative OAT model.
    pub fn kappa_over_lambda(&self) -> Option<f64> {
        match self {
            ModelParams::DissipativeOat { lambda, kappa, .. } if *lambda != 0.0 => Some(kappa / lambda),
            _ => None,
        }
    }
}

pub fn build_hamiltonian(sys: &SpinSystem, params: &ModelParams) -> Result<CMat> {
    params.validate()?;
    let sz2 = sys.sz() * sys.sz();
    let h = match *params {
        ModelParams::DissipativeOat { omega, lambda, kappa } => {
            sys.identity() * real(-omega / 2.0) + sz2 * real(-lambda / 2.0) + sys.sx() * (I * (2.0 * kappa))
        }
        ModelParams::NvLipkin { epsilon, gamma, chi, v } => {
            let lipkin = sys.sx() * sys.sx() - sys.sy() * sys.sy();
            sys.sz() * c(epsilon, -gamma) + sz2 * real(chi / 2.0) + lipkin * real(v)
        }
    };
    Ok(h)
}

/// Offset `ω` (with `λ = 1`) used for the N = 4 reference spectra.
pub const REFERENCE_OMEGA: f64 = -5.0;

/// The dissipative OAT family `κ/λ ↦ H` at fixed `N`, `ω`, `λ`.
pub fn oat_family(particles: u32, omega: f64, lambda: f64) -> impl Fn(f64) -> CMat + Sync + Send {
    let sys = SpinSystem::from_particles(particles);
    let base = sys.identity() * real(-omega / 2.0) + sys.sz() * sys.sz() * real(-lambda / 2.0);
    let sx = sys.sx().clone();
    move |ratio: f64| &base + &sx * (I * (2.0 * ratio * lambda))
}

#[derive(Debug, Clone)]
pub struct CoherentState {
    pub theta0: f64,
    pub phi0: f64,
    pub amplitudes: CVec,
    /// Normalization constant `𝒩` multiplying the unnormalized binomial
    /// amplitudes. For `θ₀ = π` the amplitudes are the highest-weight basis
    /// vector itself and this is 1.
    pub norm_constant: f64,
}

impl CoherentState {
    /// Unit vector `n⃗₀` with `S⃗·n⃗₀ |I⟩ = -S |I⟩`.
    pub fn direction(&self) -> [f64; 3] {
        let (st, ct) = self.theta0.sin_cos();
        let (sp, cp) = self.phi0.sin_cos();
        [st * cp, st * sp, ct]
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn coherent_spin_state(sys: &SpinSystem, theta0: f64, phi0: f64) -> Result<CoherentState> {
    if !theta0.is_finite() || !phi0.is_finite() {
        return Err(Error::InvalidInput("coherent-state angles must be finite".into()));
    }
    if !(0.0..=std::f64::consts::PI).contains(&theta0) {
        return Err(Error::InvalidInput(format!("theta0 = {theta0} outside [0, π]")));
    }
    let two_s = sys.two_s();
    let dim = sys.dim();
    if theta0 == std::f64::consts::PI {
        let mut amplitudes = CVec::zeros(dim);
        amplitudes[dim - 1] = real(1.0);
        return Ok(CoherentState { theta0, phi0, amplitudes, norm_constant: 1.0 });
    }
    let z = Complex64::from_polar((theta0 / 2.0).tan(), -phi0);
    let raw: Vec<Complex64> = (0..=two_s).map(|k| z.powu(k) * binomial(two_s, k).sqrt()).collect();
    let raw = DVector::from_vec(raw);
    let nrm = raw.norm();
    Ok(CoherentState { theta0, phi0, amplitudes: &raw / real(nrm), norm_constant: 1.0 / nrm })
}

/// `𝒯𝒫 H 𝒫⁻¹𝒯⁻¹` with `𝒫 = 1` on spin space and `𝒯 = e^{iπS_y} K`.
pub fn pt_transform(sys: &SpinSystem, h: &CMat) -> Result<CMat> {
    if h.nrows() != sys.dim() || h.ncols() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: h.nrows() });
    }
    let u = time_reversal_unitary(sys);
    let h_conj = h.map(|z| z.conj());
    Ok(&u * h_conj * u.adjoint())
}

/// `e^{iπS_y}`.
pub fn time_reversal_unitary(sys: &SpinSystem) -> CMat {
    let (vals, vecs) = hermitian_eigen(sys.sy());
    let phases: Vec<Complex64> = vals.iter().map(|&v| Complex64::from_polar(1.0, std::f64::consts::PI * v)).collect();
    &vecs * crate::linalg::diag(&phases) * vecs.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fro_norm, max_abs};
    use std::f64::consts::PI;

    fn commutator(a: &CMat, b: &CMat) -> CMat {
        a * b - b * a
    }

    #[test]
    fn spin_half_is_pauli_over_two() {
        let sys = SpinSystem::new(0.5).unwrap();
        assert_eq!(sys.dim(), 2);
        assert_eq!(sys.sz()[(0, 0)], real(-0.5));
        assert_eq!(sys.sz()[(1, 1)], real(0.5));
        assert!((sys.sx()[(0, 1)].norm() - 0.5).abs() < 1e-15);
        assert!((sys.sx()[(1, 0)].norm() - 0.5).abs() < 1e-15);
        assert!((sys.sy()[(0, 1)].norm() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn spin_two_ladder() {
        let sys = SpinSystem::new(2.0).unwrap();
        assert_eq!(sys.dim(), 5);
        let diag: Vec<f64> = (0..5).map(|k| sys.sz()[(k, k)].re).collect();
        assert_eq!(diag, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn commutators_and_casimir_spin_five() {
        let sys = SpinSystem::new(5.0).unwrap();
        let r = commutator(sys.sx(), sys.sy()) - sys.sz() * I;
        assert!(max_abs(&r) < 1e-12);
        let r = commutator(sys.sy(), sys.sz()) - sys.sx() * I;
        assert!(max_abs(&r) < 1e-12);
        let r = commutator(sys.sz(), sys.sx()) - sys.sy() * I;
        assert!(max_abs(&r) < 1e-12);
        let cas = sys.sx() * sys.sx() + sys.sy() * sys.sy() + sys.sz() * sys.sz();
        let expected = sys.identity() * real(30.0);
        assert!(max_abs(&(cas - expected)) < 1e-12 * 30.0);
    }

    #[test]
    fn rejects_bad_spin() {
        assert!(matches!(SpinSystem::new(-0.5), Err(Error::InvalidSpin(_))));
        assert!(matches!(SpinSystem::new(0.3), Err(Error::InvalidSpin(_))));
        assert!(SpinSystem::new(0.0).is_ok());
    }

    #[test]
    fn oat_without_dissipation_is_diagonal() {
        let sys = SpinSystem::new(2.0).unwrap();
        let (omega, lambda) = (0.7, 1.3);
        let h = build_hamiltonian(&sys, &ModelParams::DissipativeOat { omega, lambda, kappa: 0.0 }).unwrap();
        for k in 0..5 {
            let m = k as f64 - 2.0;
            assert!((h[(k, k)] - real(-omega / 2.0 - lambda / 2.0 * m * m)).norm() < 1e-14);
        }
        assert!(fro_norm(&(&h - h.adjoint())) < 1e-14);
    }

    #[test]
    fn nv_without_loss_or_lipkin_is_hermitian_diagonal() {
        let sys = SpinSystem::new(1.5).unwrap();
        let h = build_hamiltonian(&sys, &ModelParams::NvLipkin { epsilon: 1.0, gamma: 0.0, chi: 2.88, v: 0.0 }).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(h[(i, j)].norm() < 1e-14);
                }
            }
            assert!(h[(i, i)].im.abs() < 1e-14);
        }
    }

    #[test]
    fn oat_is_pt_invariant() {
        let sys = SpinSystem::new(2.5).unwrap();
        let h = build_hamiltonian(&sys, &ModelParams::DissipativeOat { omega: -5.0, lambda: 1.0, kappa: 0.37 }).unwrap();
        let t = pt_transform(&sys, &h).unwrap();
        assert!(max_abs(&(t - &h)) < 1e-12);
    }

    #[test]
    fn zeeman_term_flips_under_pt() {
        let sys = SpinSystem::new(1.5).unwrap();
        let eps = 0.8;
        let h = sys.sz() * real(eps);
        let t = pt_transform(&sys, &h).unwrap();
        assert!(max_abs(&(t + &h)) < 1e-12);
        let zero = CMat::zeros(4, 4);
        assert!(max_abs(&pt_transform(&sys, &zero).unwrap()) == 0.0);
    }

    #[test]
    fn css_limits() {
        let sys = SpinSystem::new(2.0).unwrap();
        let st = coherent_spin_state(&sys, 0.0, 0.0).unwrap();
        assert!((st.amplitudes[0] - real(1.0)).norm() < 1e-15);
        let st = coherent_spin_state(&sys, PI, 0.3).unwrap();
        assert_eq!(st.amplitudes[4], real(1.0));
        let half = SpinSystem::new(0.5).unwrap();
        let st = coherent_spin_state(&half, PI / 2.0, 0.0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((st.amplitudes[0] - real(r)).norm() < 1e-15);
        assert!((st.amplitudes[1] - real(r)).norm() < 1e-15);
        assert!(coherent_spin_state(&sys, -0.1, 0.0).is_err());
    }

    #[test]
    fn css_matches_brute_force_eigenvector() {
        let sys = SpinSystem::new(2.0).unwrap();
        let theta = PI / 4.0;
        let st = coherent_spin_state(&sys, theta, 0.0).unwrap();
        let op = sys.along([theta.sin(), 0.0, theta.cos()]);
        let (vals, vecs) = hermitian_eigen(&op);
        assert!((vals[0] + 2.0).abs() < 1e-12);
        let overlap = vecs.column(0).dotc(&st.amplitudes).norm();
        assert!(overlap >= 1.0 - 1e-10, "overlap {overlap}");
    }
}
