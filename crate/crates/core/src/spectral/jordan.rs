use num_complex::Complex64;

use super::{is_complex, SpectralData, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{self, real, CMat, CVec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JordanBlock {
    pub eigenvalue: Complex64,
    pub size: usize,
    /// Column of `P̃` where the block starts (the eigenvector of the chain).
    pub start: usize,
}

/// Jordan decomposition `H = P̃ J P̃⁻¹`.
#[derive(Debug, Clone)]
pub struct JordanData {
    pub j: CMat,
    /// Generalized right eigenvectors, chain by chain.
    pub p_tilde: CMat,
    /// `P̄ = (P̃†)⁻¹`.
    pub p_bar: CMat,
    /// `v̄_k`: columns of `(P̄⁻¹)ᵀ = conj(P̃)`, so that `v̄_kᵀ ψ̄_j = δ_kj`.
    pub v_bar: CMat,
    pub blocks: Vec<JordanBlock>,
    /// `‖H P̃ − P̃ J‖_F / (‖H‖ ‖P̃‖_F)`.
    pub residual: f64,
}

impl JordanData {
    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    pub fn block_structure(&self) -> Vec<(Complex64, usize)> {
        self.blocks.iter().map(|b| (b.eigenvalue, b.size)).collect()
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|k| self.j[(k, k)]).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        self.blocks.iter().all(|b| b.size == 1)
    }

    /// `max_kj |v̄_kᵀ ψ̄_j − δ_kj|`.
    pub fn pairing_residual(&self) -> f64 {
        let n = self.dim();
        linalg::max_abs(&(self.v_bar.transpose() * &self.p_bar - CMat::identity(n, n)))
    }

    pub fn reconstruct(&self) -> Result<CMat> {
        Ok(&self.p_tilde * &self.j * linalg::inverse(&self.p_tilde)?)
    }

    /// Trivial decomposition of a diagonalizable spectrum: one 1-block per eigenvalue.
    pub fn from_spectral(sd: &SpectralData) -> Result<JordanData> {
        let blocks = (0..sd.dim()).map(|k| JordanBlock { eigenvalue: sd.eigenvalues[k], size: 1, start: k }).collect();
        assemble(None, sd.right.clone(), blocks, sd.h_norm)
    }
}

struct Chain {
    eigenvalue: Complex64,
    vectors: Vec<CVec>,
}

/// Generalized eigenvector chains for every eigenvalue cluster of `h`.
///
/// Eigenvalues whose values and eigenvectors have coalesced to within
/// `√τ_defect` are grouped. For each group the generalized eigenspace is
/// taken from `null((H − μ)^m)`, the nilpotent part is restricted to it, and
/// chains are read off from the kernel flag of its powers.
pub fn jordan_chains(h: &CMat, sd: &SpectralData, tol: &Tolerances) -> Result<JordanData> {
    tol.validate()?;
    let n = sd.dim();
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: h.nrows() });
    }
    let h_norm = sd.h_norm.max(f64::MIN_POSITIVE);
    let band = tol.tau_defect.sqrt();

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let close = (sd.eigenvalues[a] - sd.eigenvalues[b]).norm() < band * h_norm;
            let parallel = 1.0 - sd.right.column(a).dotc(&sd.right.column(b)).norm() < band;
            if close && parallel {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for k in 0..n {
        let r = find(&mut parent, k);
        if root_slot[r] == usize::MAX {
            root_slot[r] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[root_slot[r]].push(k);
    }

    let mut chains: Vec<Chain> = Vec::new();
    for cluster in &clusters {
        if cluster.len() == 1 {
            let k = cluster[0];
            chains.push(Chain { eigenvalue: sd.eigenvalues[k], vectors: vec![sd.right.column(k).into_owned()] });
        } else {
            chains.extend(cluster_chains(h, sd, cluster, h_norm, tol)?);
        }
    }

    chains.sort_by(|a, b| {
        let (ea, eb) = (a.eigenvalue, b.eigenvalue);
        b.vectors
            .len()
            .cmp(&a.vectors.len())
            .then(is_complex(ea, h_norm, tol).cmp(&is_complex(eb, h_norm, tol)))
            .then(ea.re.total_cmp(&eb.re))
            .then(ea.im.total_cmp(&eb.im))
    });

    let mut columns = Vec::with_capacity(n);
    let mut blocks = Vec::with_capacity(chains.len());
    for chain in chains {
        blocks.push(JordanBlock { eigenvalue: chain.eigenvalue, size: chain.vectors.len(), start: columns.len() });
        columns.extend(chain.vectors);
    }
    let p_tilde = CMat::from_columns(&columns);
    let data = assemble(Some(h), p_tilde, blocks, h_norm)?;
    if !(data.residual < tol.tau_jordan) {
        return Err(Error::JordanResidual { residual: data.residual, tolerance: tol.tau_jordan });
    }
    Ok(data)
}

fn cluster_chains(h: &CMat, sd: &SpectralData, cluster: &[usize], h_norm: f64, tol: &Tolerances) -> Result<Vec<Chain>> {
    let n = h.nrows();
    let m = cluster.len();
    let mu = cluster.iter().map(|&k| sd.eigenvalues[k]).sum::<Complex64>() / real(m as f64);
    let a = h - CMat::identity(n, n) * mu;

    // Generalized eigenspace: the m weakest right singular directions of A^m.
    let mut a_pow = a.clone();
    for _ in 1..m {
        a_pow = &a_pow * &a;
    }
    let q = weakest_directions(&a_pow, m);
    let b = q.adjoint() * &a * &q;

    // Kernel flag of the restricted nilpotent part.
    let thr = tol.tau_jordan.sqrt() * h_norm;
    let mut kernels: Vec<CMat> = vec![CMat::zeros(m, 0)];
    let mut b_pow = CMat::identity(m, m);
    let mut scale = 1.0;
    loop {
        b_pow = &b_pow * &b;
        let p = kernels.len();
        let threshold = thr * scale;
        scale *= h_norm;
        let svals = linalg::singular_values(&b_pow);
        let rank = svals.iter().filter(|&&s| s > threshold).count();
        // B^m must vanish on a genuine generalized eigenspace; anything left is
        // roundoff and is caught by the residual check.
        let kernel = if rank == 0 || p >= m { CMat::identity(m, m) } else { weakest_directions(&b_pow, m - rank) };
        kernels.push(kernel);
        if rank == 0 || p >= m {
            break;
        }
    }
    let depth = kernels.len() - 1;
    let dims: Vec<usize> = kernels.iter().map(|k| k.ncols()).collect();

    // Number of chains reaching level p is dims[p] - dims[p-1].
    let reach = |p: usize| -> usize {
        if p > depth {
            0
        } else {
            dims[p].saturating_sub(dims[p - 1])
        }
    };
    let mut tops: Vec<(usize, CVec)> = Vec::new();
    for p in (1..=depth).rev() {
        let wanted = reach(p).saturating_sub(reach(p + 1));
        if wanted == 0 {
            continue;
        }
        let mut existing: Vec<CVec> = kernels[p - 1].column_iter().map(|c| c.into_owned()).collect();
        for (size, y) in &tops {
            let mut v = y.clone();
            for _ in 0..(size - p) {
                v = &b * v;
            }
            existing.push(v);
        }
        let w = if existing.is_empty() { CMat::zeros(m, 0) } else { linalg::orthonormalize(&CMat::from_columns(&existing), 1e-12) };
        let kp = &kernels[p];
        let proj = kp - &w * (w.adjoint() * kp);
        let svd = proj.svd(false, true);
        let v_t = svd.v_t.ok_or_else(|| Error::Numerical("SVD failed in Jordan chain".into()))?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
        for &i in order.iter().take(wanted) {
            tops.push((p, kp * v_t.row(i).adjoint()));
        }
    }

    let mut chains = Vec::new();
    for (size, y) in tops {
        let top = &q * y;
        let mut vectors = vec![top];
        for _ in 1..size {
            let next = &a * vectors.last().unwrap();
            vectors.push(next);
        }
        vectors.reverse();
        let nrm = vectors[0].norm();
        if nrm == 0.0 {
            return Err(Error::Numerical("degenerate Jordan chain".into()));
        }
        for v in &mut vectors {
            *v /= real(nrm);
        }
        chains.push(Chain { eigenvalue: mu, vectors });
    }
    Ok(chains)
}

/// Orthonormal columns spanning the `count` right singular directions of
/// `m` with the smallest singular values.
fn weakest_directions(m: &CMat, count: usize) -> CMat {
    let gram = m.adjoint() * m;
    let (_, vecs) = linalg::hermitian_eigen(&gram);
    vecs.columns(0, count).into_owned()
}

fn assemble(h: Option<&CMat>, p_tilde: CMat, blocks: Vec<JordanBlock>, h_norm: f64) -> Result<JordanData> {
    let n = p_tilde.ncols();
    let mut j = CMat::zeros(n, n);
    for b in &blocks {
        for k in 0..b.size {
            j[(b.start + k, b.start + k)] = b.eigenvalue;
            if k + 1 < b.size {
                j[(b.start + k, b.start + k + 1)] = real(1.0);
            }
        }
    }
    let residual = match h {
        Some(h) => linalg::fro_norm(&(h * &p_tilde - &p_tilde * &j)) / (h_norm.max(f64::MIN_POSITIVE) * linalg::fro_norm(&p_tilde)),
        None => 0.0,
    };
    let p_bar = linalg::inverse(&p_tilde.adjoint())?;
    let v_bar = p_tilde.conjugate();
    Ok(JordanData { j, p_tilde, p_bar, v_bar, blocks, residual })
}
