//! Symmetry operators for the four spectral cases, the Krein split into a
//! positive metric, and the coordinate/observable transforms that go with it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, real, CMat, CVec, I};
use crate::spectral::{Classification, JordanData, SpectralData, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricCase {
    /// Real spectrum, `S = Σ|ψ̄_j⟩⟨ψ̄_j|`.
    #[serde(rename = "case_i")]
    CaseI,
    /// Real and conjugate-pair spectrum, indefinite `S`.
    #[serde(rename = "case_ii")]
    CaseII,
    /// Exceptional point, `S` built on Jordan chains.
    #[serde(rename = "case_iii")]
    CaseIII,
    /// Unpaired complex spectrum, `S = Σ|ψ̄_j⟩⟨ψ̄_j|` without intertwining.
    #[serde(rename = "case_iv")]
    CaseIV,
}

impl MetricCase {
    /// Cases whose symmetry operator intertwines `H` and `H†`.
    pub fn intertwines(self) -> bool {
        !matches!(self, MetricCase::CaseIV)
    }
}

impl std::fmt::Display for MetricCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MetricCase::CaseI => "case_i",
            MetricCase::CaseII => "case_ii",
            MetricCase::CaseIII => "case_iii",
            MetricCase::CaseIV => "case_iv",
        })
    }
}

/// Weights on the real-eigenvalue terms and the conjugate-pair terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaPolicy {
    pub alpha_diag: Complex64,
    pub alpha_pair: Complex64,
}

impl Default for AlphaPolicy {
    fn default() -> Self {
        AlphaPolicy { alpha_diag: real(1.0), alpha_pair: I }
    }
}

impl AlphaPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_diag.re == 0.0 || !self.alpha_diag.re.is_finite() {
            return Err(Error::InvalidInput("alpha_diag must have a nonzero real part".into()));
        }
        if self.alpha_pair.im == 0.0 || !self.alpha_pair.im.is_finite() {
            return Err(Error::InvalidInput("alpha_pair must have a nonzero imaginary part".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SymmetryOperator {
    pub matrix: CMat,
    pub case: MetricCase,
    pub alpha: Option<AlphaPolicy>,
    /// Right (generalized) eigenvector basis the operator was built on.
    pub basis: CMat,
}

impl SymmetryOperator {
    /// Wraps an explicit self-adjoint matrix, with the standard basis as `A_H`.
    pub fn from_matrix(matrix: CMat, case: MetricCase) -> SymmetryOperator {
        let n = matrix.nrows();
        SymmetryOperator { matrix, case, alpha: None, basis: CMat::identity(n, n) }
    }

    pub fn hermitian_residual(&self) -> f64 {
        linalg::fro_norm(&(&self.matrix - self.matrix.adjoint())) / linalg::fro_norm(&self.matrix).max(f64::MIN_POSITIVE)
    }

    /// `‖S H − H† S‖ / (‖H‖ ‖S‖)`.
    pub fn intertwining_residual(&self, h: &CMat) -> f64 {
        let r = &self.matrix * h - h.adjoint() * &self.matrix;
        linalg::op_norm(&r) / (linalg::op_norm(h) * linalg::op_norm(&self.matrix)).max(f64::MIN_POSITIVE)
    }
}

fn require(sd: &SpectralData, allowed: &[Classification], expected: &'static str) -> Result<()> {
    if allowed.contains(&sd.classification) {
        Ok(())
    } else {
        Err(Error::WrongClassification { expected, found: sd.classification })
    }
}

fn left_gram(left: &CMat) -> CMat {
    let s = left * left.adjoint();
    (&s + s.adjoint()) * real(0.5)
}

/// `S_ψ = Σ_j |ψ̄_j⟩⟨ψ̄_j|` for a real, non-defective spectrum.
pub fn metric_case_real(sd: &SpectralData) -> Result<SymmetryOperator> {
    require(sd, &[Classification::AllReal], "all_real")?;
    Ok(SymmetryOperator { matrix: left_gram(&sd.left), case: MetricCase::CaseI, alpha: None, basis: sd.right.clone() })
}

/// `S_g = Σ_j |ψ̄_j⟩⟨ψ̄_j|` for a spectrum without full conjugate pairing.
pub fn metric_case_general(sd: &SpectralData) -> Result<SymmetryOperator> {
    require(sd, &[Classification::GeneralComplex], "general_complex")?;
    Ok(metric_case_general_unchecked(sd))
}

/// The positive `S_g` form applied to any non-defective spectrum, for forced runs.
pub fn metric_case_general_unchecked(sd: &SpectralData) -> SymmetryOperator {
    SymmetryOperator { matrix: left_gram(&sd.left), case: MetricCase::CaseIV, alpha: None, basis: sd.right.clone() }
}

/// Indefinite symmetry operator on a real/conjugate-pair spectrum:
/// `α|ψ̄_j⟩⟨ψ̄_i| + α*|ψ̄_i⟩⟨ψ̄_j|` for every `Ẽ_j = Ẽ_i*`, including `j = i`.
pub fn symmetry_operator_pairs(sd: &SpectralData, policy: &AlphaPolicy) -> Result<SymmetryOperator> {
    require(sd, &[Classification::AllReal, Classification::ConjugatePairs], "conjugate_pairs")?;
    policy.validate()?;
    let n = sd.dim();
    let mut g = CMat::zeros(n, n);
    let mut paired = vec![false; n];
    for &(j, i) in &sd.pair_map {
        g[(j, i)] = policy.alpha_pair;
        g[(i, j)] = policy.alpha_pair.conj();
        paired[j] = true;
        paired[i] = true;
    }
    let real_band = Tolerances::default().tau_real * sd.h_norm;
    for k in 0..n {
        if paired[k] {
            continue;
        }
        if sd.eigenvalues[k].im.abs() >= real_band {
            return Err(Error::UnmatchedEigenvalue { index: k, value: sd.eigenvalues[k] });
        }
        g[(k, k)] = real(2.0 * policy.alpha_diag.re);
    }
    let s = &sd.left * g * sd.left.adjoint();
    Ok(SymmetryOperator { matrix: (&s + s.adjoint()) * real(0.5), case: MetricCase::CaseII, alpha: Some(*policy), basis: sd.right.clone() })
}

/// Symmetry operator on Jordan chains, `S_J = P̄ G P̄†`.
///
/// `G` is block structured: a real `k`-block carries `2 Re(α_diag)·F_k`
/// (`F_k` the exchange matrix) and a complex `k`-block is coupled to its
/// conjugate partner of equal size through `α·F_k` and `α*·F_k`. This is
/// what makes `G J = J† G`, hence `S_J H = H† S_J`.
pub fn symmetry_operator_jordan(jd: &JordanData, policy: &AlphaPolicy, tol: &Tolerances) -> Result<SymmetryOperator> {
    policy.validate()?;
    tol.validate()?;
    let n = jd.dim();
    let h_norm = linalg::op_norm(&jd.j).max(f64::MIN_POSITIVE);
    let mut g = CMat::zeros(n, n);
    let mut used = vec![false; jd.blocks.len()];

    let put_flip = |g: &mut CMat, row: usize, col: usize, size: usize, value: Complex64| {
        for k in 0..size {
            g[(row + k, col + size - 1 - k)] = value;
        }
    };

    for (a, block) in jd.blocks.iter().enumerate() {
        if used[a] {
            continue;
        }
        let e = block.eigenvalue;
        if e.im.abs() < tol.tau_real * h_norm {
            put_flip(&mut g, block.start, block.start, block.size, real(2.0 * policy.alpha_diag.re));
            used[a] = true;
            continue;
        }
        // Chain eigenvalues of larger blocks are only accurate to √ε.
        let band = if block.size == 1 { tol.tau_pair } else { tol.tau_defect.sqrt() };
        let partners: Vec<usize> = jd
            .blocks
            .iter()
            .enumerate()
            .filter(|&(b, other)| b != a && !used[b] && other.size == block.size && (other.eigenvalue - e.conj()).norm() < band * h_norm)
            .map(|(b, _)| b)
            .collect();
        let b = match partners.as_slice() {
            [] => return Err(Error::UnmatchedEigenvalue { index: block.start, value: e }),
            [b] => *b,
            [first, second, ..] => {
                return Err(Error::AmbiguousPairing {
                    index: block.start,
                    first: jd.blocks[*first].start,
                    second: jd.blocks[*second].start,
                })
            }
        };
        // α sits on the row of the block with negative imaginary part.
        let (lo, hi) = if e.im < 0.0 { (a, b) } else { (b, a) };
        let (lo_start, hi_start) = (jd.blocks[lo].start, jd.blocks[hi].start);
        put_flip(&mut g, lo_start, hi_start, block.size, policy.alpha_pair);
        put_flip(&mut g, hi_start, lo_start, block.size, policy.alpha_pair.conj());
        used[a] = true;
        used[b] = true;
    }

    let s = &jd.p_bar * g * jd.p_bar.adjoint();
    Ok(SymmetryOperator {
        matrix: (&s + s.adjoint()) * real(0.5),
        case: MetricCase::CaseIII,
        alpha: Some(*policy),
        basis: jd.p_tilde.clone(),
    })
}

/// `S_g = P̄ P̄†` on Jordan data, for forced positive-metric runs at an EP.
pub fn metric_jordan_positive(jd: &JordanData) -> SymmetryOperator {
    SymmetryOperator { matrix: left_gram(&jd.p_bar), case: MetricCase::CaseIV, alpha: None, basis: jd.p_tilde.clone() }
}

/// Krein decomposition of a symmetry operator and the metric built from it.
#[derive(Debug, Clone)]
pub struct MetricContext {
    pub symmetry: SymmetryOperator,
    /// Eigenvectors of `S` (the `A_S` basis), positive eigenvalues first.
    pub r: CMat,
    pub r_inv: CMat,
    /// Signed eigenvalues `𝒟 = 𝒟₊ + 𝒟₋`.
    pub d_signed: Vec<f64>,
    pub d_plus: Vec<f64>,
    pub d_minus: Vec<f64>,
    /// `D = 𝒟₊ − 𝒟₋`, all positive.
    pub d: Vec<f64>,
    pub s_k: CMat,
    /// `Υ_K` with `S_K = Υ_K† Υ_K`.
    pub upsilon_k: CMat,
    /// `Υ′`: the `A_H → A_S` change of basis, `Υ⁻¹ R`.
    pub upsilon_prime: CMat,
}

pub fn krein_split(op: &SymmetryOperator) -> Result<MetricContext> {
    let s = &op.matrix;
    let n = s.nrows();
    if s.ncols() != n || op.basis.nrows() != n || op.basis.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: s.ncols() });
    }
    if !linalg::is_finite(s) {
        return Err(Error::NonFinite);
    }
    let herm = op.hermitian_residual();
    if herm > 1e-10 {
        return Err(Error::Numerical(format!("symmetry operator is not self-adjoint (residual {herm:.3e})")));
    }
    let s_norm = linalg::op_norm(s);
    let (values, vectors) = linalg::hermitian_eigen(s);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let d_signed: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    if let Some((index, &value)) = d_signed.iter().enumerate().find(|(_, v)| !(v.abs() > 1e-10 * s_norm)) {
        return Err(Error::SingularMetric { index, value });
    }
    let mut r = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        r.set_column(dst, &vectors.column(src));
    }
    linalg::normalize_columns(&mut r);

    let d_plus: Vec<f64> = d_signed.iter().map(|&v| v.max(0.0)).collect();
    let d_minus: Vec<f64> = d_signed.iter().map(|&v| v.min(0.0)).collect();
    let d: Vec<f64> = d_signed.iter().map(|v| v.abs()).collect();
    let r_inv = r.adjoint();
    let s_k = hermitize(&r * diag_real(&d) * &r_inv);
    let sqrt_d: Vec<f64> = d.iter().map(|v| v.sqrt()).collect();
    let upsilon_k = hermitize(&r * diag_real(&sqrt_d) * &r_inv);
    let upsilon_prime = linalg::inverse(&op.basis)? * &r;

    let ctx = MetricContext { symmetry: op.clone(), r, r_inv, d_signed, d_plus, d_minus, d, s_k, upsilon_k, upsilon_prime };
    ctx.check_positive()?;
    Ok(ctx)
}

fn hermitize(m: CMat) -> CMat {
    (&m + m.adjoint()) * real(0.5)
}

fn diag_real(values: &[f64]) -> CMat {
    linalg::diag(&values.iter().map(|&v| real(v)).collect::<Vec<_>>())
}

impl MetricContext {
    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn case(&self) -> MetricCase {
        self.symmetry.case
    }

    /// Every metric build asserts these two properties.
    fn check_positive(&self) -> Result<()> {
        let herm = linalg::fro_norm(&(&self.s_k - self.s_k.adjoint()));
        if herm > 1e-12 * linalg::fro_norm(&self.s_k) {
            return Err(Error::Numerical(format!("metric is not self-adjoint (residual {herm:.3e})")));
        }
        let (values, _) = linalg::hermitian_eigen(&self.s_k);
        match values.first() {
            Some(&min) if min > 0.0 => Ok(()),
            Some(&min) => Err(Error::SingularMetric { index: 0, value: min }),
            None => Ok(()),
        }
    }

    /// Smallest eigenvalue of `S_K`.
    pub fn min_metric_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigen(&self.s_k).0.first().copied().unwrap_or(0.0)
    }

    /// `‖R 𝒟 R⁻¹ − S‖ / ‖S‖`.
    pub fn reconstruction_residual(&self) -> f64 {
        let rebuilt = &self.r * diag_real(&self.d_signed) * &self.r_inv;
        linalg::fro_norm(&(rebuilt - &self.symmetry.matrix)) / linalg::fro_norm(&self.symmetry.matrix).max(f64::MIN_POSITIVE)
    }

    /// `⟨f|S_K g⟩`.
    pub fn s_inner_product(&self, f: &CVec, g: &CVec) -> Result<Complex64> {
        self.check_len(f)?;
        self.check_len(g)?;
        Ok(f.dotc(&(&self.s_k * g)))
    }

    /// `[f]_{A_S} = R⁻¹ f`.
    pub fn to_s_basis(&self, f: &CVec) -> Result<CVec> {
        self.check_len(f)?;
        Ok(&self.r_inv * f)
    }

    /// `F = D^{-1/2} R⁻¹ f`.
    pub fn coordinates(&self, f: &CVec) -> Result<CVec> {
        let mut v = self.to_s_basis(f)?;
        for (x, d) in v.iter_mut().zip(&self.d) {
            *x /= d.sqrt();
        }
        Ok(v)
    }

    /// `O = D^{-1/2} [ô]_{A_S} D^{1/2}` with `[ô]_{A_S} = R† ô R`.
    pub fn transform_observable(&self, obs: &CMat) -> Result<CMat> {
        let n = self.dim();
        if obs.nrows() != n || obs.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: obs.nrows() });
        }
        let resid = linalg::hermitian_residual(obs);
        if resid > 1e-10 * linalg::fro_norm(obs).max(1.0) {
            return Err(Error::NonHermitianObservable(resid));
        }
        let mut o = self.r.adjoint() * obs * &self.r;
        for i in 0..n {
            for j in 0..n {
                o[(i, j)] *= (self.d[j] / self.d[i]).sqrt();
            }
        }
        Ok(o)
    }

    /// `F† D O G` for transformed coordinates and observable.
    pub fn weighted_form(&self, f: &CVec, o: &CMat, g: &CVec) -> Complex64 {
        let og = o * g;
        f.iter().zip(og.iter()).zip(&self.d).map(|((a, b), d)| a.conj() * b * d).sum()
    }

    /// The same metric with the columns of `R` rescaled by `scales`. `S`,
    /// `𝒟` and `S_K` are unchanged; only the `A_S` coordinates move.
    pub fn rescale_basis(&self, scales: &[f64]) -> Result<MetricContext> {
        if scales.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: scales.len() });
        }
        if scales.iter().any(|s| !(s.is_finite() && *s != 0.0)) {
            return Err(Error::InvalidInput("basis scales must be finite and nonzero".into()));
        }
        let sc = diag_real(scales);
        let mut out = self.clone();
        out.r = &self.r * &sc;
        out.r_inv = linalg::inverse(&out.r)?;
        out.upsilon_prime = &self.upsilon_prime * sc;
        Ok(out)
    }

    fn check_len(&self, v: &CVec) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(())
    }
}
