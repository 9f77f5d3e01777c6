use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{eigensystem, jordan_chains, Tolerances};
use crate::error::Result;
use crate::linalg::{self, CMat};
use crate::spin::{oat_family, REFERENCE_OMEGA};

const DEFAULT_GRID: usize = 1000;
const MIN_GRID: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExceptionalPoint {
    pub ratio: f64,
    /// Mean of the colliding pair.
    pub eigenvalue: Complex64,
    /// Indices of the colliding pair in the sorted spectrum at `ratio`.
    pub colliding: (usize, usize),
    pub block_size: usize,
}

/// Eigenvalues with `|Im E| < τ_real·‖H‖`.
pub fn count_real(h: &CMat, tol: &Tolerances) -> Result<usize> {
    let (values, _) = linalg::eig(h)?;
    let bound = tol.tau_real * linalg::op_norm(h);
    Ok(values.iter().filter(|e| e.im.abs() < bound).count())
}

pub fn count_real_on_family<F>(family: &F, ratios: &[f64], tol: &Tolerances) -> Result<Vec<usize>>
where
    F: Fn(f64) -> CMat + Sync,
{
    ratios.par_iter().map(|&r| count_real(&family(r), tol)).collect()
}

/// Real-eigenvalue counts of the dissipative OAT Hamiltonian with `λ = 1`.
pub fn count_real_eigenvalues(particles: u32, ratios: &[f64], tol: &Tolerances) -> Result<Vec<usize>> {
    count_real_on_family(&oat_family(particles, REFERENCE_OMEGA, 1.0), ratios, tol)
}

/// Parameter values in `[lo, hi]` where the number of real eigenvalues
/// changes, each refined by bisection down to floating-point resolution.
pub fn locate_exceptional_points<F>(family: &F, lo: f64, hi: f64, grid: usize, tol: &Tolerances) -> Result<Vec<ExceptionalPoint>>
where
    F: Fn(f64) -> CMat + Sync,
{
    tol.validate()?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(crate::error::Error::InvalidInput(format!("range bounds must be finite and ordered, got [{lo}, {hi}]")));
    }
    if lo == hi {
        return Ok(Vec::new());
    }
    let grid = grid.max(MIN_GRID);
    let ratios: Vec<f64> = (0..=grid).map(|k| lo + (hi - lo) * k as f64 / grid as f64).collect();
    let counts = count_real_on_family(family, &ratios, tol)?;

    let mut brackets = Vec::new();
    for k in 0..grid {
        if counts[k] != counts[k + 1] {
            brackets.push((ratios[k], counts[k], ratios[k + 1], counts[k + 1]));
        }
    }
    let refined: Vec<Vec<f64>> = brackets.par_iter().map(|&(a, ca, b, cb)| bisect(family, a, ca, b, cb, tol)).collect::<Result<_>>()?;

    let mut located: Vec<f64> = refined.into_iter().flatten().collect();
    located.sort_by(|a, b| a.total_cmp(b));
    located.dedup_by(|b, a| (*b - *a).abs() <= 1e-8 * a.abs().max(b.abs()).max(1e-300));

    located.into_iter().map(|r| describe(family, r, tol)).collect()
}

/// Exceptional points of the dissipative OAT model at `λ = 1`.
pub fn locate_oat_exceptional_points(particles: u32, lo: f64, hi: f64, tol: &Tolerances) -> Result<Vec<ExceptionalPoint>> {
    locate_exceptional_points(&oat_family(particles, REFERENCE_OMEGA, 1.0), lo, hi, DEFAULT_GRID, tol)
}

fn bisect<F>(family: &F, mut a: f64, ca: usize, mut b: f64, cb: usize, tol: &Tolerances) -> Result<Vec<f64>>
where
    F: Fn(f64) -> CMat + Sync,
{
    loop {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b || b - a <= 4.0 * f64::EPSILON * mid.abs() {
            return Ok(vec![mid]);
        }
        let cm = count_real(&family(mid), tol)?;
        if cm == ca {
            a = mid;
        } else if cm == cb {
            b = mid;
        } else {
            // Two transitions inside the bracket.
            let mut left = bisect(family, a, ca, mid, cm, tol)?;
            left.extend(bisect(family, mid, cm, b, cb, tol)?);
            return Ok(left);
        }
    }
}

fn describe<F>(family: &F, ratio: f64, tol: &Tolerances) -> Result<ExceptionalPoint>
where
    F: Fn(f64) -> CMat + Sync,
{
    let h = family(ratio);
    let sd = eigensystem(&h, tol)?;
    let mut best = (f64::INFINITY, 0, 1);
    for i in 0..sd.dim() {
        for j in (i + 1)..sd.dim() {
            let d = (sd.eigenvalues[i] - sd.eigenvalues[j]).norm();
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    let (_, i, j) = best;
    let eigenvalue = (sd.eigenvalues[i] + sd.eigenvalues[j]) * 0.5;
    let block_size = jordan_chains(&h, &sd, tol)
        .ok()
        .and_then(|jd| {
            jd.blocks.iter().filter(|b| (b.eigenvalue - eigenvalue).norm() < tol.tau_defect.sqrt() * sd.h_norm).map(|b| b.size).max()
        })
        .filter(|&s| s >= 2)
        .unwrap_or(2);
    Ok(ExceptionalPoint { ratio, eigenvalue, colliding: (i, j), block_size })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{build_hamiltonian, ModelParams, SpinSystem};

    #[test]
    fn n4_eps_match_reference_values() {
        let eps = locate_oat_exceptional_points(4, 0.0, 0.5, &Tolerances::default()).unwrap();
        assert_eq!(eps.len(), 2);
        assert!((eps[0].ratio - 0.0739815).abs() < 1e-6);
        assert!((eps[1].ratio - 0.375).abs() < 1e-9);
        assert!((eps[0].eigenvalue.re - 2.2428).abs() < 1e-3);
        assert!((eps[1].eigenvalue.re - 1.25).abs() < 1e-6);
        assert!(eps.iter().all(|e| e.block_size == 2));
    }

    #[test]
    fn no_eps_above_second() {
        assert!(locate_oat_exceptional_points(4, 0.4, 0.5, &Tolerances::default()).unwrap().is_empty());
    }

    #[test]
    fn hermitian_family_has_none() {
        let sys = SpinSystem::from_particles(6);
        let family = |r: f64| build_hamiltonian(&sys, &ModelParams::NvLipkin { epsilon: r, gamma: 0.0, chi: 1.0, v: 0.3 }).unwrap();
        let eps = locate_exceptional_points(&family, -2.0, 2.0, 200, &Tolerances::default()).unwrap();
        assert!(eps.is_empty());
    }

    #[test]
    fn grid_refinement_is_stable() {
        let tol = Tolerances::default();
        let family = oat_family(4, REFERENCE_OMEGA, 1.0);
        let coarse = locate_exceptional_points(&family, 0.0, 0.5, 400, &tol).unwrap();
        let fine = locate_exceptional_points(&family, 0.0, 0.5, 800, &tol).unwrap();
        assert_eq!(coarse.len(), fine.len());
        for (a, b) in coarse.iter().zip(&fine) {
            assert!((a.ratio - b.ratio).abs() < 1e-9);
        }
    }

    #[test]
    fn n4_counts() {
        let tol = Tolerances::default();
        assert_eq!(count_real_eigenvalues(4, &[0.05, 0.1, 0.5], &tol).unwrap(), vec![5, 3, 1]);
        assert_eq!(count_real_eigenvalues(10, &[0.01, 1.5], &tol).unwrap(), vec![11, 1]);
    }
}
