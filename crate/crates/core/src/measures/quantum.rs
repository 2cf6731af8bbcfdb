use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::gaussian::symplectic_form;

const PHYSICAL_SLACK: f64 = 1e-6;

/// Symplectic eigenvalues of `cov` in ascending order, unclamped.
///
/// Computed as the square roots of the paired spectrum of the symmetric matrix
/// `σ^{1/2} Jᵀ σ J σ^{1/2}`, which equals that of `(iJσ)²`.
pub fn symplectic_spectrum(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    let d = cov.nrows();
    if d == 0 || !d.is_multiple_of(2) || cov.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d + d % 2,
            found: cov.ncols(),
        });
    }
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    let min = eig.eigenvalues.min();
    if !(min > 0.0) {
        return Err(Error::NonPhysical { value: min });
    }
    let root = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
        * eig.eigenvectors.transpose();
    let j = symplectic_form(d / 2);
    let m = &root * j.transpose() * &sym * &j * &root;
    let mut nu2: Vec<f64> = SymmetricEigen::new((&m + m.transpose()) * 0.5)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    nu2.sort_by(f64::total_cmp);
    Ok(nu2
        .chunks(2)
        .map(|p| (0.5 * (p[0] + p[1])).max(0.0).sqrt())
        .collect())
}

/// Spectrum of a state claimed physical, clamped to `≥ ½`.
pub fn physical_symplectic_spectrum(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    let nu = symplectic_spectrum(cov)?;
    if let Some(&bad) = nu.iter().find(|&&v| v < 0.5 - PHYSICAL_SLACK) {
        return Err(Error::NonPhysical { value: bad });
    }
    Ok(nu.into_iter().map(|v| v.max(0.5)).collect())
}

fn entropy_term(nu: f64) -> f64 {
    let (a, b) = (nu + 0.5, nu - 0.5);
    let tail = if b > 1e-300 { b * b.ln() } else { 0.0 };
    a * a.ln() - tail
}

/// von Neumann entropy in nats.
pub fn vn_entropy(cov: &DMatrix<f64>) -> Result<f64> {
    Ok(physical_symplectic_spectrum(cov)?
        .into_iter()
        .map(entropy_term)
        .sum())
}

fn check_two_mode(cov: &DMatrix<f64>) -> Result<()> {
    if cov.nrows() != 4 || cov.ncols() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: cov.nrows(),
        });
    }
    Ok(())
}

/// Single-mode marginal of a two-mode covariance in `(x₁, x₂, p₁, p₂)` order.
pub fn marginal(cov: &DMatrix<f64>, mode: usize) -> DMatrix<f64> {
    let idx = [mode, mode + 2];
    DMatrix::from_fn(2, 2, |r, c| cov[(idx[r], idx[c])])
}

/// Entropies `(S₁, S₂, S₁₂)` of a two-mode covariance.
pub fn pair_entropies(cov: &DMatrix<f64>) -> Result<(f64, f64, f64)> {
    check_two_mode(cov)?;
    Ok((
        vn_entropy(&marginal(cov, 0))?,
        vn_entropy(&marginal(cov, 1))?,
        vn_entropy(cov)?,
    ))
}

pub fn mutual_information(cov: &DMatrix<f64>) -> Result<f64> {
    let (s1, s2, s12) = pair_entropies(cov)?;
    Ok(s1 + s2 - s12)
}

/// Logarithmic negativity of a two-mode covariance; partial transpose flips `p₂`.
pub fn log_negativity(cov: &DMatrix<f64>) -> Result<f64> {
    check_two_mode(cov)?;
    physical_symplectic_spectrum(cov)?;
    let mut pt = cov.clone();
    for k in 0..4 {
        if k != 3 {
            pt[(3, k)] = -pt[(3, k)];
            pt[(k, 3)] = -pt[(k, 3)];
        }
    }
    // ν_min(σ) = 1/ν_max(σ⁻¹); the largest eigenvalue keeps full relative precision
    let inv = pt
        .cholesky()
        .ok_or(Error::NonPhysical { value: f64::NAN })?
        .inverse();
    let nu_max_inv = *symplectic_spectrum(&inv)?.last().expect("two modes");
    Ok((0.5 * nu_max_inv).ln().max(0.0))
}

/// Correlation diagnostics of the probe pair over time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrelationReport {
    pub times: Vec<f64>,
    pub e: Vec<f64>,
    pub mi: Vec<f64>,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub s12: Vec<f64>,
}

impl CorrelationReport {
    /// Builds the report from two-mode covariance blocks sampled at `times`.
    pub fn from_blocks(times: &[f64], blocks: &[DMatrix<f64>]) -> Result<Self> {
        if times.len() != blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: blocks.len(),
            });
        }
        let mut out = CorrelationReport {
            times: times.to_vec(),
            ..Default::default()
        };
        for b in blocks {
            let (s1, s2, s12) = pair_entropies(b)?;
            out.e.push(log_negativity(b)?);
            out.mi.push(s1 + s2 - s12);
            out.s1.push(s1);
            out.s2.push(s2);
            out.s12.push(s12);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Indices with `t ∈ [t0, t1]`.
    pub fn indices_in(&self, t0: f64, t1: f64) -> impl Iterator<Item = usize> + '_ {
        self.times
            .iter()
            .enumerate()
            .filter(move |(_, &t)| t >= t0 && t <= t1)
            .map(|(i, _)| i)
    }
}
