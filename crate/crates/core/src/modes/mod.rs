//! Normal modes of the probe pair and their couplings to the chain modes.
//!
//! The probe Hamiltonian is diagonalized by the rotation
//! `q₁ = cos θ x₁ + sin θ x₂`, `q₂ = −sin θ x₁ + cos θ x₂` with
//! `tan 2θ = 2λ / (ω₂² − ω₁²)`. Each chain mode `Q_j` then couples to
//! `q₁` and `q₂` with strengths `c₁(j)`, `c₂(j)`.

mod kernels;
mod langevin;
mod rayleigh;

use std::f64::consts::{FRAC_PI_4, PI};

pub use kernels::{damping_kernels, KernelModes, Kernels};
pub use langevin::{
    solve_gqle_means, solve_gqle_means_with, Convolution, GqleInitial, GqleTrajectory,
};
pub use rayleigh::{
    default_broadening, markov_damping_matrix, ohmic_gap_ratio, probe_stiffness,
    rayleigh_reduction, GapRatio, RayleighReport, DEFAULT_SYNC_THRESHOLD,
};

use crate::error::{Error, Result};
use crate::lattice::{EnvironmentModes, ProbePair};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeAngle {
    pub theta: f64,
    /// Set when λ = 0 and ω₁ = ω₂: every angle diagonalizes the probe block and θ = 0 is returned.
    pub degenerate: bool,
}

/// Mixing angle θ of the probe normal modes.
///
/// `2θ = atan2(2λ, ω₂² − ω₁²)`, so θ → 0 for λ → 0 with ω₂ > ω₁ and θ = π/4
/// for identical probes with λ > 0. `q₁` always carries the lower frequency.
pub fn system_mode_angle(omega1: f64, omega2: f64, lambda: f64) -> Result<ModeAngle> {
    if !(omega1 > 0.0 && omega2 > 0.0) {
        return Err(Error::InvalidParameter(
            "probe frequencies must be positive".into(),
        ));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter("lambda must be >= 0".into()));
    }
    let detuning = omega2 * omega2 - omega1 * omega1;
    if lambda == 0.0 && detuning == 0.0 {
        return Ok(ModeAngle {
            theta: 0.0,
            degenerate: true,
        });
    }
    let theta = if detuning == 0.0 {
        FRAC_PI_4
    } else {
        0.5 * (2.0 * lambda).atan2(detuning)
    };
    Ok(ModeAngle {
        theta,
        degenerate: false,
    })
}

/// Normal-mode frequencies `(Λ₁, Λ₂)` of the coupled probes, `Λ₁ ≤ Λ₂`.
pub fn system_eigenfrequencies(omega1: f64, omega2: f64, lambda: f64) -> (f64, f64) {
    let mean = lambda + 0.5 * (omega1 * omega1 + omega2 * omega2);
    let d = omega1 * omega1 - omega2 * omega2;
    let half_split = 0.5 * (4.0 * lambda * lambda + d * d).sqrt();
    let l1 = (mean - half_split).max(0.0).sqrt();
    let l2 = (mean + half_split).sqrt();
    (l1, l2)
}

/// Coupling coefficients `c₁(j)`, `c₂(j)`, `j = 1..=M`, for probes at sites `m` and `n`
/// of a homogeneous fixed-end chain.
///
/// `sign2 = −1` flips the second probe's coupling (repulsive variant).
pub fn coupling_coefficients(
    theta: f64,
    k: f64,
    site_m: usize,
    site_n: usize,
    sites: usize,
    sign2: f64,
) -> (Vec<f64>, Vec<f64>) {
    let m1 = sites as f64 + 1.0;
    let pre = (2.0 * k * k / m1).sqrt() * k.signum();
    let (s, c) = theta.sin_cos();
    let mut c1 = Vec::with_capacity(sites);
    let mut c2 = Vec::with_capacity(sites);
    for j in 1..=sites {
        let um = (PI * (j * site_m) as f64 / m1).sin();
        let un = sign2 * (PI * (j * site_n) as f64 / m1).sin();
        c1.push(pre * (c * um + s * un));
        c2.push(pre * (c * un - s * um));
    }
    (c1, c2)
}

/// Probe normal modes together with their couplings to every environment mode.
#[derive(Debug, Clone)]
pub struct SystemModes {
    pub theta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    /// Environment frequencies `Ω_j`, ascending, matching `c1`/`c2`.
    pub chain_frequencies: Vec<f64>,
}

impl SystemModes {
    pub fn new(probes: &ProbePair, env: &EnvironmentModes) -> Result<Self> {
        probes.validate(env.len())?;
        let angle = system_mode_angle(probes.omega1, probes.omega2, probes.lambda)?;
        let (lambda1, lambda2) =
            system_eigenfrequencies(probes.omega1, probes.omega2, probes.lambda);
        let (s, c) = angle.theta.sin_cos();
        let mut c1 = Vec::with_capacity(env.len());
        let mut c2 = Vec::with_capacity(env.len());
        for j in 0..env.len() {
            let um = probes.k * env.amplitude(probes.site_m, j);
            let un = probes.sign2 * probes.k * env.amplitude(probes.site_n, j);
            c1.push(c * um + s * un);
            c2.push(c * un - s * um);
        }
        Ok(Self {
            theta: angle.theta,
            lambda1,
            lambda2,
            c1,
            c2,
            chain_frequencies: env.frequencies.clone(),
        })
    }

    /// Rotation taking probe positions `(x₁, x₂)` to `(q₁, q₂)`.
    pub fn to_normal(&self, x1: f64, x2: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (c * x1 + s * x2, -s * x1 + c * x2)
    }

    pub fn from_normal(&self, q1: f64, q2: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (c * q1 - s * q2, s * q1 + c * q2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resonance {
    /// 1-based index of the closest chain mode.
    Mode(usize),
    /// The frequency lies outside `[Ω_min, Ω_max]`.
    OutOfBand,
}

impl Resonance {
    pub fn index(self) -> Option<usize> {
        match self {
            Resonance::Mode(k) => Some(k),
            Resonance::OutOfBand => None,
        }
    }
}

/// Chain modes `k₋`, `k₊` resonant with `Λ₁` and `Λ₂`; `frequencies` must be ascending.
pub fn resonant_mode_indices(
    lambda1: f64,
    lambda2: f64,
    frequencies: &[f64],
) -> (Resonance, Resonance) {
    (
        closest_mode(lambda1, frequencies),
        closest_mode(lambda2, frequencies),
    )
}

fn closest_mode(target: f64, frequencies: &[f64]) -> Resonance {
    let (Some(&lo), Some(&hi)) = (frequencies.first(), frequencies.last()) else {
        return Resonance::OutOfBand;
    };
    if target < lo || target > hi {
        return Resonance::OutOfBand;
    }
    let mut best = 0;
    for (j, f) in frequencies.iter().enumerate() {
        // strict comparison keeps the lower index on ties
        if (f - target).abs() < (frequencies[best] - target).abs() {
            best = j;
        }
    }
    Resonance::Mode(best + 1)
}

/// Effective resonant couplings for probe 1 at the chain edge and probe 2 at site `m`:
/// `K√(2/(M+1))·[c₁, c₂]` with `c₁ = cos θ sin(πk₋/(M+1)) + sin θ sin(πk₋m/(M+1))`
/// and `c₂ = cos θ sin(πk₊m/(M+1)) − sin θ sin(πk₊/(M+1))`.
pub fn resonant_couplings(
    theta: f64,
    k: f64,
    site: usize,
    sites: usize,
    k_minus: usize,
    k_plus: usize,
) -> (f64, f64) {
    let m1 = sites as f64 + 1.0;
    let pre = k * (2.0 / m1).sqrt();
    let (s, c) = theta.sin_cos();
    let arg = |k: usize, m: usize| (PI * (k * m) as f64 / m1).sin();
    let c1 = c * arg(k_minus, 1) + s * arg(k_minus, site);
    let c2 = c * arg(k_plus, site) - s * arg(k_plus, 1);
    (pre * c1, pre * c2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::NetworkConfig;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix2, SymmetricEigen};

    #[test]
    fn angle_limits() {
        let a = system_mode_angle(1.0, 1.1, 0.0).unwrap();
        assert_eq!(a.theta, 0.0);
        assert!(!a.degenerate);
        let a = system_mode_angle(1.0, 1.0, 0.3).unwrap();
        assert_eq!(a.theta, FRAC_PI_4);
        let a = system_mode_angle(1.0, 1.0, 0.0).unwrap();
        assert!(a.degenerate);
        assert_eq!(a.theta, 0.0);
    }

    #[test]
    fn fig2_angle_matches_eigenvector() {
        let a = system_mode_angle(1.0, 1.1, 0.5).unwrap();
        assert!((a.theta - 0.6819).abs() < 1e-4, "{}", a.theta);
        let block = Matrix2::<f64>::new(1.5, -0.5, -0.5, 1.21 + 0.5);
        let eig = SymmetricEigen::new(block);
        let low = if eig.eigenvalues[0] < eig.eigenvalues[1] {
            0
        } else {
            1
        };
        let v = eig.eigenvectors.column(low);
        let angle: f64 = (v[1] / v[0]).atan();
        assert_relative_eq!(angle, a.theta, epsilon = 1e-12);
    }

    #[test]
    fn eigenfrequency_cases() {
        let (l1, l2) = system_eigenfrequencies(1.0, 1.1, 0.0);
        assert_relative_eq!(l1, 1.0, epsilon = 1e-14);
        assert_relative_eq!(l2, 1.1, epsilon = 1e-14);
        let (l1, l2) = system_eigenfrequencies(1.0, 1.0, 0.5);
        assert_relative_eq!(l1, 1.0, epsilon = 1e-14);
        assert_relative_eq!(l2, 2f64.sqrt(), epsilon = 1e-14);
        let (l1, l2) = system_eigenfrequencies(1.0, 1.1, 0.5);
        assert!((l1 * l1 - 1.094).abs() < 1e-3, "{}", l1 * l1);
        assert!((l2 * l2 - 2.116).abs() < 1e-3, "{}", l2 * l2);
        let ev = Matrix2::new(1.5, -0.5, -0.5, 1.71).symmetric_eigenvalues();
        assert_relative_eq!(ev.min(), l1 * l1, epsilon = 1e-12);
        assert_relative_eq!(ev.max(), l2 * l2, epsilon = 1e-12);
    }

    #[test]
    fn coupling_coefficient_limits() {
        let (c1, c2) = coupling_coefficients(0.4, 0.0, 1, 3, 10, 1.0);
        assert!(c1.iter().chain(&c2).all(|&c| c == 0.0));

        let (m, k) = (10usize, 0.3);
        let (c1, c2) = coupling_coefficients(0.0, k, 1, 4, m, 1.0);
        let pre = (2.0 * k * k / 11.0).sqrt();
        for j in 1..=m {
            assert_relative_eq!(
                c1[j - 1],
                pre * (PI * j as f64 / 11.0).sin(),
                epsilon = 1e-15
            );
            assert_relative_eq!(
                c2[j - 1],
                pre * (PI * (4 * j) as f64 / 11.0).sin(),
                epsilon = 1e-15
            );
        }

        // equal sites, θ = π/4: c₂ vanishes
        let (c1, c2) = coupling_coefficients(FRAC_PI_4, k, 2, 2, m, 1.0);
        assert!(c2.iter().all(|c| c.abs() < 1e-15));
        let expect = pre * 2f64.sqrt() * (PI * 2.0 / 11.0).sin();
        assert_relative_eq!(c1[0], expect, epsilon = 1e-14);
    }

    #[test]
    fn system_modes_agree_with_closed_form() {
        let cfg = NetworkConfig::chain(40, 0.4, 1.2);
        let env = EnvironmentModes::new(&cfg).unwrap();
        let probes = ProbePair {
            omega1: 1.0,
            omega2: 1.1,
            lambda: 0.5,
            k: 0.2,
            site_m: 3,
            site_n: 17,
            sign2: -1.0,
        };
        let modes = SystemModes::new(&probes, &env).unwrap();
        let (c1, c2) = coupling_coefficients(modes.theta, 0.2, 3, 17, 40, -1.0);
        for j in 0..40 {
            assert_relative_eq!(modes.c1[j], c1[j], epsilon = 1e-14);
            assert_relative_eq!(modes.c2[j], c2[j], epsilon = 1e-14);
        }
        let (q1, q2) = modes.to_normal(0.3, -0.7);
        let (x1, x2) = modes.from_normal(q1, q2);
        assert_relative_eq!(x1, 0.3, epsilon = 1e-15);
        assert_relative_eq!(x2, -0.7, epsilon = 1e-15);
    }

    #[test]
    fn resonance_lookup() {
        let cfg = NetworkConfig::chain(300, 0.4, 1.2);
        let freqs: Vec<f64> = (1..=300).map(|j| cfg.dispersion_sq(j).sqrt()).collect();
        assert_eq!(
            resonant_mode_indices(0.2, 1.0, &freqs).0,
            Resonance::OutOfBand
        );
        assert_eq!(
            resonant_mode_indices(3.0, 1.0, &freqs).0,
            Resonance::OutOfBand
        );
        assert_eq!(
            resonant_mode_indices(freqs[16], freqs[16], &freqs).0,
            Resonance::Mode(17)
        );

        let (l1, l2) = system_eigenfrequencies(1.0, 1.1, 0.5);
        let (km, kp) = resonant_mode_indices(l1, l2, &freqs);
        let brute = |t: f64| {
            let mut best = (f64::INFINITY, 0);
            for (j, f) in freqs.iter().enumerate() {
                if (f - t).abs() < best.0 {
                    best = ((f - t).abs(), j + 1);
                }
            }
            best.1
        };
        assert_eq!(km, Resonance::Mode(brute(l1)));
        assert_eq!(kp, Resonance::Mode(brute(l2)));
        assert!(kp.index().unwrap() > km.index().unwrap());
    }

    #[test]
    fn resonance_ties_prefer_lower_index() {
        let freqs = [1.0, 2.0, 3.0];
        assert_eq!(
            resonant_mode_indices(1.5, 2.5, &freqs),
            (Resonance::Mode(1), Resonance::Mode(2))
        );
    }

    #[test]
    fn resonant_couplings_reduce_to_edge_modes() {
        let (c1, c2) = resonant_couplings(0.0, 0.06, 150, 300, 40, 90);
        let pre = 0.06 * (2.0f64 / 301.0).sqrt();
        assert_relative_eq!(c1, pre * (PI * 40.0 / 301.0).sin(), epsilon = 1e-15);
        assert_relative_eq!(c2, pre * (PI * 90.0 * 150.0 / 301.0).sin(), epsilon = 1e-15);
    }
}
