//! Biorthonormal eigensystems of non-Hermitian matrices, spectral
//! classification, Jordan chains at exceptional points and exceptional-point
//! location along one-parameter families.

mod ep;
mod jordan;

pub use ep::{
    count_real, count_real_eigenvalues, count_real_on_family, locate_exceptional_points, locate_oat_exceptional_points, ExceptionalPoint,
};
pub use jordan::{jordan_chains, JordanBlock, JordanData};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Tolerances, all relative to `‖H‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// `|Im E| < tau_real·‖H‖` counts as a real eigenvalue.
    pub tau_real: f64,
    /// Conjugate-partner matching band.
    pub tau_pair: f64,
    /// Eigenvector-coalescence threshold on the smallest singular value of
    /// the column-normalized right-eigenvector matrix.
    pub tau_defect: f64,
    /// Jordan chain residual bound.
    pub tau_jordan: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tau_real: 1e-9, tau_pair: 1e-9, tau_defect: 1e-6, tau_jordan: 1e-7 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("tau_real", self.tau_real), ("tau_pair", self.tau_pair), ("tau_defect", self.tau_defect), ("tau_jordan", self.tau_jordan)]
        {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be strictly positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    AllReal,
    ConjugatePairs,
    GeneralComplex,
    Defective,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::AllReal => "all_real",
            Classification::ConjugatePairs => "conjugate_pairs",
            Classification::GeneralComplex => "general_complex",
            Classification::Defective => "defective",
        };
        f.write_str(s)
    }
}

/// Eigenvalues `Ẽ_j`, right vectors `φ̃_j` (columns of `Υ`), left vectors `ψ̄_j`
/// with `⟨ψ̄_i|φ̃_j⟩ = δ_ij`, and the spectral classification.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<Complex64>,
    /// `Υ`: unit-norm right eigenvectors as columns (the `A_k → A_H` transform).
    pub right: CMat,
    /// `ψ̄_j` as columns.
    pub left: CMat,
    /// `(j, i)` with `j < i` and `Ẽ_j ≈ Ẽ_i*` for every complex eigenvalue.
    pub pair_map: Vec<(usize, usize)>,
    pub classification: Classification,
    /// Smallest singular value of the column-normalized `Υ`.
    pub defect_indicator: f64,
    /// `τ_defect` in force when the data was built.
    pub defect_threshold: f64,
    pub h_norm: f64,
    pub hermitian: bool,
    pub jordan: Option<JordanData>,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_defective(&self) -> bool {
        self.defect_indicator < self.defect_threshold
    }

    /// Real eigenvalues under the given tolerances.
    pub fn real_count(&self, tol: &Tolerances) -> usize {
        self.eigenvalues.iter().filter(|e| e.im.abs() < tol.tau_real * self.h_norm).count()
    }

    /// `max_ij |⟨ψ̄_i|φ̃_j⟩ - δ_ij|`.
    pub fn biorthonormality_residual(&self) -> f64 {
        let g = self.left.adjoint() * &self.right;
        let n = self.dim();
        linalg::max_abs(&(g - CMat::identity(n, n)))
    }

    pub fn reconstruct(&self) -> Result<CMat> {
        let inv = linalg::inverse(&self.right)?;
        Ok(&self.right * linalg::diag(&self.eigenvalues) * inv)
    }
}

fn is_complex(e: Complex64, h_norm: f64, tol: &Tolerances) -> bool {
    e.im.abs() >= tol.tau_real * h_norm
}

/// Canonical ordering: real eigenvalues first, then complex ones, each by
/// `(Re, Im)`.
fn sort_order(values: &[Complex64], h_norm: f64, tol: &Tolerances) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let (ea, eb) = (values[a], values[b]);
        is_complex(ea, h_norm, tol).cmp(&is_complex(eb, h_norm, tol)).then(ea.re.total_cmp(&eb.re)).then(ea.im.total_cmp(&eb.im))
    });
    order
}

fn permute_columns(m: &CMat, order: &[usize]) -> CMat {
    let mut out = CMat::zeros(m.nrows(), order.len());
    for (dst, &src) in order.iter().enumerate() {
        out.set_column(dst, &m.column(src));
    }
    out
}

pub fn eigensystem(h: &CMat, tol: &Tolerances) -> Result<SpectralData> {
    tol.validate()?;
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch { expected: h.nrows(), found: h.ncols() });
    }
    if !linalg::is_finite(h) {
        return Err(Error::NonFinite);
    }
    let n = h.nrows();
    let h_norm = linalg::op_norm(h);
    let hermitian = linalg::is_hermitian(h, 1e-14);

    let (values, right) = if hermitian {
        let (vals, vecs) = linalg::hermitian_eigen(h);
        (vals.into_iter().map(linalg::real).collect::<Vec<_>>(), vecs)
    } else {
        linalg::eig(h)?
    };
    let order = sort_order(&values, h_norm, tol);
    let eigenvalues: Vec<Complex64> = order.iter().map(|&k| values[k]).collect();
    let right = permute_columns(&right, &order);

    let defect_indicator = if n == 0 { 1.0 } else { linalg::min_singular_value_normalized(&right) };
    let defective = !hermitian && defect_indicator < tol.tau_defect;

    let left = if hermitian {
        right.clone()
    } else if defective {
        left_from_adjoint(h, &eigenvalues, &right)?
    } else {
        linalg::inverse(&right)?.adjoint()
    };

    let (classification, pair_map) = classify_values(&eigenvalues, h_norm, defective, tol)?;
    Ok(SpectralData {
        eigenvalues,
        right,
        left,
        pair_map,
        classification,
        defect_indicator,
        h_norm,
        hermitian,
        defect_threshold: tol.tau_defect,
        jordan: None,
    })
}

/// Re-derives the classification and conjugate pairing of `sd` under `tol`.
pub fn classify_spectrum(sd: &SpectralData, tol: &Tolerances) -> Result<(Classification, Vec<(usize, usize)>)> {
    tol.validate()?;
    let defective = !sd.hermitian && sd.defect_indicator < tol.tau_defect;
    classify_values(&sd.eigenvalues, sd.h_norm, defective, tol)
}

/// Classification of a bare spectrum; `defective` overrides everything else.
pub fn classify_values(
    values: &[Complex64],
    h_norm: f64,
    defective: bool,
    tol: &Tolerances,
) -> Result<(Classification, Vec<(usize, usize)>)> {
    let band = tol.tau_pair * h_norm;
    let complex: Vec<usize> = (0..values.len()).filter(|&k| is_complex(values[k], h_norm, tol)).collect();

    let mut pair_map = Vec::new();
    let mut matched = vec![false; values.len()];
    let mut all_paired = true;
    for &j in complex.iter().filter(|&&k| values[k].im < 0.0) {
        let target = values[j].conj();
        let mut candidates: Vec<(f64, usize)> =
            complex.iter().filter(|&&i| values[i].im > 0.0).map(|&i| ((values[i] - target).norm(), i)).filter(|&(d, _)| d < band).collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
        match candidates.as_slice() {
            [] => all_paired = false,
            [(_, i)] => {
                if matched[*i] {
                    let first =
                        pair_map.iter().find(|&&(a, b)| a == *i || b == *i).map(|&(a, b)| if a == *i { b } else { a }).unwrap_or(*i);
                    return Err(Error::AmbiguousPairing { index: *i, first, second: j });
                }
                matched[*i] = true;
                matched[j] = true;
                pair_map.push((j.min(*i), j.max(*i)));
            }
            [(_, a), (_, b), ..] => {
                return Err(Error::AmbiguousPairing { index: j, first: *a, second: *b });
            }
        }
    }
    if complex.iter().any(|&k| !matched[k]) {
        all_paired = false;
    }
    pair_map.sort();

    let classification = if defective {
        Classification::Defective
    } else if complex.is_empty() {
        Classification::AllReal
    } else if all_paired {
        Classification::ConjugatePairs
    } else {
        Classification::GeneralComplex
    };
    if classification == Classification::GeneralComplex {
        pair_map.clear();
    }
    Ok((classification, pair_map))
}

/// Left eigenvectors obtained by diagonalizing `H†` directly, matched to
/// `conj(Ẽ_j)` and scaled so `⟨ψ̄_j|φ̃_j⟩ = 1` wherever that overlap is not
/// degenerate. Coalesced directions keep unit norm.
pub fn left_from_adjoint(h: &CMat, eigenvalues: &[Complex64], right: &CMat) -> Result<CMat> {
    let (adj_values, adj_vectors) = linalg::eig(&h.adjoint())?;
    let n = eigenvalues.len();
    let mut used = vec![false; n];
    let mut left = CMat::zeros(n, n);
    for (j, e) in eigenvalues.iter().enumerate() {
        let target = e.conj();
        let best = (0..n)
            .filter(|&k| !used[k])
            .min_by(|&a, &b| (adj_values[a] - target).norm().total_cmp(&(adj_values[b] - target).norm()))
            .ok_or_else(|| Error::Numerical("adjoint spectrum exhausted".into()))?;
        used[best] = true;
        let mut v = adj_vectors.column(best).into_owned();
        let overlap = v.dotc(&right.column(j));
        if overlap.norm() > 1e-8 {
            v /= overlap.conj();
        }
        left.set_column(j, &v);
    }
    Ok(left)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real};
    use crate::spin::{build_hamiltonian, ModelParams, SpinSystem};

    fn oat(particles: u32, ratio: f64) -> CMat {
        let sys = SpinSystem::from_particles(particles);
        build_hamiltonian(&sys, &ModelParams::oat_with_ratio(-5.0, 1.0, ratio)).unwrap()
    }

    #[test]
    fn hermitian_input_has_equal_left_and_right() {
        let h = CMat::from_row_slice(2, 2, &[real(1.0), c(0.0, 0.5), c(0.0, -0.5), real(-2.0)]);
        let sd = eigensystem(&h, &Tolerances::default()).unwrap();
        assert_eq!(sd.classification, Classification::AllReal);
        assert!(linalg::max_abs(&(&sd.left - &sd.right)) < 1e-15);
        assert!(sd.biorthonormality_residual() < 1e-12);
    }

    #[test]
    fn n10_strong_dissipation_has_one_real_eigenvalue() {
        let sd = eigensystem(&oat(10, 1.5), &Tolerances::default()).unwrap();
        assert_eq!(sd.real_count(&Tolerances::default()), 1);
        assert_eq!(sd.classification, Classification::ConjugatePairs);
        assert_eq!(sd.pair_map.len(), 5);
    }

    #[test]
    fn n4_between_eps_has_three_real_one_pair() {
        let sd = eigensystem(&oat(4, 0.1), &Tolerances::default()).unwrap();
        assert_eq!(sd.classification, Classification::ConjugatePairs);
        assert_eq!(sd.real_count(&Tolerances::default()), 3);
        assert_eq!(sd.pair_map, vec![(3, 4)]);
        assert!(sd.biorthonormality_residual() < 1e-10);
    }

    #[test]
    fn classify_bare_spectra() {
        let tol = Tolerances::default();
        let (cls, pairs) = classify_values(&[real(1.0), real(2.0), real(3.0)], 3.0, false, &tol).unwrap();
        assert_eq!(cls, Classification::AllReal);
        assert!(pairs.is_empty());
        let (cls, _) = classify_values(&[c(1.0, 1.0), real(2.0)], 2.0, false, &tol).unwrap();
        assert_eq!(cls, Classification::GeneralComplex);
        let spectrum = [real(1.25), real(1.25), real(0.754), c(2.12, -1.34), c(2.12, 1.34)];
        let (cls, _) = classify_values(&spectrum, 3.0, true, &tol).unwrap();
        assert_eq!(cls, Classification::Defective);
        let (cls, pairs) = classify_values(&spectrum, 3.0, false, &tol).unwrap();
        assert_eq!(cls, Classification::ConjugatePairs);
        assert_eq!(pairs, vec![(3, 4)]);
    }

    #[test]
    fn duplicated_conjugate_pairs_are_ambiguous() {
        let tol = Tolerances::default();
        let spectrum = [c(1.0, -1.0), c(1.0, -1.0), c(1.0, 1.0), c(1.0, 1.0)];
        let err = classify_values(&spectrum, 2.0, false, &tol).unwrap_err();
        assert!(matches!(err, Error::AmbiguousPairing { .. }));
    }

    #[test]
    fn rejects_non_finite() {
        let mut h = CMat::identity(2, 2);
        h[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(eigensystem(&h, &Tolerances::default()), Err(Error::NonFinite)));
    }

    #[test]
    fn adjoint_route_agrees_with_inverse_route() {
        let h = oat(4, 0.2);
        let sd = eigensystem(&h, &Tolerances::default()).unwrap();
        let alt = left_from_adjoint(&h, &sd.eigenvalues, &sd.right).unwrap();
        assert!(linalg::max_abs(&(alt - &sd.left)) < 1e-9);
    }
}
