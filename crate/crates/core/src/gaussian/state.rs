use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lattice::{EnvironmentModes, NetworkConfig, QuadraticForm, PROBES};

/// Canonical symplectic form for `n` modes in positions-then-momenta order,
/// `J = [[0, I], [−I, 0]]`.
pub fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// First and second moments of a Gaussian state.
///
/// Ordering is `(x_1 … x_n, p_1 … p_n)`; `cov_ab = ½⟨{r_a, r_b}⟩ − ⟨r_a⟩⟨r_b⟩`, so the
/// vacuum of a unit-frequency oscillator is `diag(½, ½)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if !d.is_multiple_of(2) {
            return Err(Error::InvalidParameter(
                "phase-space dimension must be even".into(),
            ));
        }
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: cov.nrows(),
            });
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        Ok(Self { mean, cov })
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn position_mean(&self, k: usize) -> f64 {
        self.mean[k]
    }

    pub fn momentum_mean(&self, k: usize) -> f64 {
        self.mean[self.modes() + k]
    }

    /// Central second moment `⟨x_k²⟩ − ⟨x_k⟩²`.
    pub fn position_variance(&self, k: usize) -> f64 {
        self.cov[(k, k)]
    }

    /// `⟨H⟩` for `H = ½pᵀp + ½xᵀVx`.
    pub fn energy(&self, qf: &QuadraticForm) -> Result<f64> {
        let n = self.modes();
        if qf.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: qf.dim(),
                found: n,
            });
        }
        let v = qf.matrix();
        let x = self.mean.rows(0, n);
        let p = self.mean.rows(n, n);
        let sxx = self.cov.view((0, 0), (n, n));
        let spp = self.cov.view((n, n), (n, n));
        let mean_part = 0.5 * (p.dot(&p) + x.dot(&(v * x)));
        let fluct = 0.5 * (spp.trace() + (v * sxx).trace());
        Ok(mean_part + fluct)
    }
}

/// Quadrature that carries the reduced variance of a squeezed vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Squeezing {
    #[default]
    Position,
    Momentum,
}

/// Squeezed vacuum of an oscillator of frequency `omega`, as a `(x, p)` covariance.
///
/// Position squeezing gives `diag(e^{−2r}/(2ω), ω e^{2r}/2)`; `r = 0` is the ground state.
pub fn squeezed_vacuum_local(omega: f64, r: f64, quadrature: Squeezing) -> Result<Matrix2<f64>> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "omega must be > 0, got {omega}"
        )));
    }
    let r = match quadrature {
        Squeezing::Position => r,
        Squeezing::Momentum => -r,
    };
    Ok(Matrix2::new(
        (-2.0 * r).exp() / (2.0 * omega),
        0.0,
        0.0,
        omega * (2.0 * r).exp() / 2.0,
    ))
}

/// Two-mode squeezed vacuum in `(x₁, x₂, p₁, p₂)` order.
pub fn two_mode_squeezed_vacuum(r: f64) -> DMatrix<f64> {
    let c = 0.5 * (2.0 * r).cosh();
    let s = 0.5 * (2.0 * r).sinh();
    DMatrix::from_row_slice(
        4,
        4,
        &[
            c, s, 0.0, 0.0, //
            s, c, 0.0, 0.0, //
            0.0, 0.0, c, -s, //
            0.0, 0.0, -s, c,
        ],
    )
}

/// Ground state of the isolated chain.
///
/// With the environment modes `O` and frequencies `Ω_j`,
/// `σ_xx = ½ O diag(1/Ω_j) Oᵀ`, `σ_pp = ½ O diag(Ω_j) Oᵀ`, `σ_xp = 0`.
pub fn chain_ground_state(cfg: &NetworkConfig) -> Result<GaussianState> {
    let env = EnvironmentModes::new(cfg)?;
    ground_state_from_modes(&env)
}

pub(crate) fn ground_state_from_modes(env: &EnvironmentModes) -> Result<GaussianState> {
    let m = env.len();
    if let Some(j) = env.frequencies.iter().position(|&w| w <= 1e-12) {
        return Err(Error::ZeroMode { index: j + 1 });
    }
    let o = &env.vectors;
    let inv = DMatrix::from_diagonal(&DVector::from_iterator(
        m,
        env.frequencies.iter().map(|w| 0.5 / w),
    ));
    let dir = DMatrix::from_diagonal(&DVector::from_iterator(
        m,
        env.frequencies.iter().map(|w| 0.5 * w),
    ));
    let sxx = o * inv * o.transpose();
    let spp = o * dir * o.transpose();
    let mut cov = DMatrix::zeros(2 * m, 2 * m);
    cov.view_mut((0, 0), (m, m)).copy_from(&sxx);
    cov.view_mut((m, m), (m, m)).copy_from(&spp);
    GaussianState::new(DVector::zeros(2 * m), cov)
}

/// Single-mode probe state: `(⟨x⟩, ⟨p⟩)` and its `(x, p)` covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeState {
    pub mean: [f64; 2],
    pub cov: Matrix2<f64>,
}

impl ProbeState {
    pub fn coherent(omega: f64, x: f64, p: f64) -> Result<Self> {
        Ok(Self {
            mean: [x, p],
            cov: squeezed_vacuum_local(omega, 0.0, Squeezing::Position)?,
        })
    }

    /// Symplectic eigenvalue `√det σ`.
    pub fn symplectic_eigenvalue(&self) -> f64 {
        self.cov.determinant().max(0.0).sqrt()
    }
}

/// Product of the two probe states and the chain ground state.
pub fn initial_composite_state(
    probes: [ProbeState; 2],
    cfg: &NetworkConfig,
) -> Result<GaussianState> {
    for p in &probes {
        let nu = p.symplectic_eigenvalue();
        if nu < 0.5 - 1e-12 || (p.cov[(0, 1)] - p.cov[(1, 0)]).abs() > 1e-12 {
            return Err(Error::UncertaintyViolation { value: nu });
        }
    }
    let chain = chain_ground_state(cfg)?;
    let m = cfg.sites;
    let n = m + PROBES;
    let mut mean = DVector::zeros(2 * n);
    let mut cov = DMatrix::zeros(2 * n, 2 * n);
    for (i, p) in probes.iter().enumerate() {
        mean[i] = p.mean[0];
        mean[n + i] = p.mean[1];
        cov[(i, i)] = p.cov[(0, 0)];
        cov[(i, n + i)] = p.cov[(0, 1)];
        cov[(n + i, i)] = p.cov[(1, 0)];
        cov[(n + i, n + i)] = p.cov[(1, 1)];
    }
    for a in 0..2 {
        for b in 0..2 {
            cov.view_mut((a * n + PROBES, b * n + PROBES), (m, m))
                .copy_from(&chain.cov.view((a * m, b * m), (m, m)));
        }
    }
    GaussianState::new(mean, cov)
}

/// Marginal on the listed modes, kept in the given order.
pub fn reduce(state: &GaussianState, modes: &[usize]) -> Result<GaussianState> {
    let n = state.modes();
    if let Some(&bad) = modes.iter().find(|&&k| k >= n) {
        return Err(Error::InvalidParameter(format!(
            "mode {bad} out of range 0..{n}"
        )));
    }
    let idx: Vec<usize> = modes
        .iter()
        .copied()
        .chain(modes.iter().map(|k| k + n))
        .collect();
    let mean = DVector::from_iterator(idx.len(), idx.iter().map(|&i| state.mean[i]));
    let cov = DMatrix::from_fn(idx.len(), idx.len(), |r, c| state.cov[(idx[r], idx[c])]);
    GaussianState::new(mean, cov)
}

/// Smallest eigenvalue of the Hermitian matrix `σ + (i/2)J`.
///
/// Uses the real representation `[[σ, −J/2], [J/2, σ]]`, whose spectrum is that
/// of the Hermitian matrix with every eigenvalue doubled.
pub fn uncertainty_min_eigenvalue(cov: &DMatrix<f64>) -> f64 {
    let d = cov.nrows();
    let j = symplectic_form(d / 2) * 0.5;
    let mut big = DMatrix::zeros(2 * d, 2 * d);
    big.view_mut((0, 0), (d, d)).copy_from(cov);
    big.view_mut((d, d), (d, d)).copy_from(cov);
    big.view_mut((0, d), (d, d)).copy_from(&(-&j));
    big.view_mut((d, 0), (d, d)).copy_from(&j);
    SymmetricEigen::new(big).eigenvalues.min()
}
