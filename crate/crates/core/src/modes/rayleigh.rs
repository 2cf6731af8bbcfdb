use std::f64::consts::PI;

use nalgebra::{Matrix2, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lattice::{EnvironmentModes, ProbePair};

/// Gap threshold as a fraction of the larger reduced damping.
pub const DEFAULT_SYNC_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct RayleighReport {
    /// Damping in the eigenbasis of the stiffness matrix, ordered by ascending stiffness.
    pub gp: Matrix2<f64>,
    /// Eigenvalues of the stiffness matrix, ascending.
    pub stiffness: [f64; 2],
    pub gap: f64,
    pub tau_s: f64,
    pub ratio: GapRatio,
    pub predicts_sync: bool,
    /// Frobenius norm of `[G, A]`.
    pub commutator_norm: f64,
    /// `|G′₁₂| / max(|G′₁₁|, |G′₂₂|)`, the part dropped by the reduction.
    pub off_diagonal: f64,
}

/// Ratio `G′₁₁/G′₂₂`, infinite when the second mode is undamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapRatio {
    Finite(f64),
    Infinite,
}

impl GapRatio {
    pub fn value(self) -> f64 {
        match self {
            GapRatio::Finite(r) => r,
            GapRatio::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, GapRatio::Infinite)
    }
}

/// Rayleigh reduction: rotate `G` into the eigenbasis of `A` and keep its diagonal.
pub fn rayleigh_reduction(
    a: &Matrix2<f64>,
    g: &Matrix2<f64>,
    threshold: f64,
) -> Result<RayleighReport> {
    if (a[(0, 1)] - a[(1, 0)]).abs() > 1e-12 * a.norm()
        || (g[(0, 1)] - g[(1, 0)]).abs() > 1e-12 * g.norm().max(1e-300)
    {
        return Err(Error::InvalidParameter(
            "stiffness and damping must be symmetric".into(),
        ));
    }
    let eig = SymmetricEigen::new(*a);
    let (lo, hi) = if eig.eigenvalues[0] <= eig.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    if eig.eigenvalues[lo] <= 0.0 {
        return Err(Error::InvalidParameter(
            "stiffness matrix must be positive definite".into(),
        ));
    }
    let m = Matrix2::from_columns(&[
        eig.eigenvectors.column(lo).into_owned(),
        eig.eigenvectors.column(hi).into_owned(),
    ]);
    // M is orthogonal, so M⁻¹ = Mᵀ
    let gp = m.transpose() * g * m;
    let (g11, g22) = (gp[(0, 0)], gp[(1, 1)]);
    let largest = g11.abs().max(g22.abs());
    let gap = (g11 - g22).abs();
    let ratio = if g22 == 0.0 || (largest > 0.0 && g22.abs() <= 1e-14 * largest) {
        if g11 == 0.0 {
            GapRatio::Finite(f64::NAN)
        } else {
            GapRatio::Infinite
        }
    } else {
        GapRatio::Finite(g11 / g22)
    };
    let commutator = g * a - a * g;
    Ok(RayleighReport {
        gp,
        stiffness: [eig.eigenvalues[lo], eig.eigenvalues[hi]],
        gap,
        tau_s: 1.0 / largest,
        ratio,
        predicts_sync: largest > 0.0 && gap > threshold * largest,
        commutator_norm: commutator.norm(),
        off_diagonal: if largest > 0.0 {
            gp[(0, 1)].abs() / largest
        } else {
            0.0
        },
    })
}

/// Damping ratio of the common-bath Ohmic limit, `(1 + sin 2θ)/(1 − sin 2θ)`.
pub fn ohmic_gap_ratio(theta: f64) -> GapRatio {
    let s = (2.0 * theta).sin();
    let den = 1.0 - s;
    if den.abs() <= 1e-15 {
        GapRatio::Infinite
    } else {
        GapRatio::Finite((1.0 + s) / den)
    }
}

/// Probe stiffness matrix `A` in the `(x₁, x₂)` basis.
pub fn probe_stiffness(probes: &ProbePair) -> Matrix2<f64> {
    let l = probes.lambda;
    Matrix2::new(
        probes.omega1 * probes.omega1 + l,
        -l,
        -l,
        probes.omega2 * probes.omega2 + l,
    )
}

/// Time-local damping matrix `G` in the `(x₁, x₂)` basis.
///
/// Each entry is the frequency-resolved friction `Re γ̂_ab(ω) = (π/2) Σ_j k_a(j)k_b(j)/Ω_j² δ(ω − Ω_j)`
/// of the probe-position kernels, with the delta broadened to a Gaussian of
/// width `broadening` and evaluated at `omega_ref`. Here `k_a(j)` is the
/// coupling of probe `a` to chain mode `j`.
pub fn markov_damping_matrix(
    probes: &ProbePair,
    env: &EnvironmentModes,
    omega_ref: f64,
    broadening: f64,
) -> Result<Matrix2<f64>> {
    if !(broadening > 0.0) {
        return Err(Error::InvalidParameter("broadening must be > 0".into()));
    }
    let norm = 1.0 / (broadening * (2.0 * PI).sqrt());
    let mut g = Matrix2::zeros();
    for j in 0..env.len() {
        let w = env.frequencies[j];
        if w <= 1e-12 {
            return Err(Error::ZeroMode { index: j + 1 });
        }
        let k1 = probes.k * env.amplitude(probes.site_m, j);
        let k2 = probes.sign2 * probes.k * env.amplitude(probes.site_n, j);
        let x = (omega_ref - w) / broadening;
        let weight = 0.5 * PI * norm * (-0.5 * x * x).exp() / (w * w);
        g[(0, 0)] += weight * k1 * k1;
        g[(1, 1)] += weight * k2 * k2;
        g[(0, 1)] += weight * k1 * k2;
    }
    g[(1, 0)] = g[(0, 1)];
    Ok(g)
}

/// Default Gaussian broadening: three mean level spacings of the environment band.
pub fn default_broadening(env: &EnvironmentModes) -> f64 {
    let n = env.len();
    let span = env.frequencies[n - 1] - env.frequencies[0];
    3.0 * span / (n.max(2) - 1) as f64
}
