//! Quadratic Hamiltonian of two probe oscillators plugged into a harmonic chain.
//!
//! All frequencies are in units of ω₁ and stiffnesses in ω₁², with unit masses
//! and ħ = 1. The full system is written as `H = ½ pᵀp + ½ xᵀVx`; the probes
//! occupy indices 0 and 1 and chain site `j` (1-based) sits at index `j + 1`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Default threshold below which the smallest eigenvalue of `V` is treated as unstable.
pub const DEFAULT_STABILITY_TOLERANCE: f64 = 1e-10;

/// Number of probe oscillators.
pub const PROBES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Both chain ends attached to fixed walls (sine normal modes).
    #[default]
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub sites: usize,
    pub omega0: f64,
    pub g: f64,
    pub boundary: Boundary,
    /// General network stiffness matrix `A_jk`; overrides the chain when set.
    /// Each pair contributes `½ A_jk (X_j − X_k)²`, i.e. the graph Laplacian of `A`.
    pub coupling_matrix: Option<DMatrix<f64>>,
}

impl NetworkConfig {
    pub fn chain(sites: usize, omega0: f64, g: f64) -> Self {
        Self {
            sites,
            omega0,
            g,
            boundary: Boundary::Fixed,
            coupling_matrix: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(Error::InvalidParameter(format!(
                "chain needs at least 2 sites, got {}",
                self.sites
            )));
        }
        if !(self.omega0 >= 0.0) || !self.omega0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "omega0 must be >= 0, got {}",
                self.omega0
            )));
        }
        if !(self.g > 0.0) || !self.g.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "g must be > 0, got {}",
                self.g
            )));
        }
        if let Some(a) = &self.coupling_matrix {
            if a.nrows() != self.sites || a.ncols() != self.sites {
                return Err(Error::DimensionMismatch {
                    expected: self.sites,
                    found: a.nrows(),
                });
            }
            for j in 0..self.sites {
                if a[(j, j)] != 0.0 {
                    return Err(Error::InvalidParameter(
                        "coupling matrix must have a zero diagonal".into(),
                    ));
                }
                for k in 0..j {
                    if a[(j, k)] != a[(k, j)] {
                        return Err(Error::InvalidParameter(
                            "coupling matrix must be symmetric".into(),
                        ));
                    }
                    if a[(j, k)] < 0.0 {
                        return Err(Error::InvalidParameter(
                            "coupling matrix entries must be non-negative".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_homogeneous_chain(&self) -> bool {
        self.coupling_matrix.is_none()
    }

    /// Squared chain normal-mode frequency `Ω_j² = Ω₀² + 4g sin²(πj / 2(M+1))`, `j = 1..=M`.
    pub fn dispersion_sq(&self, j: usize) -> f64 {
        let s = (PI * j as f64 / (2.0 * (self.sites as f64 + 1.0))).sin();
        self.omega0 * self.omega0 + 4.0 * self.g * s * s
    }

    /// Largest group velocity `max_k dΩ/dk` of the infinite chain with the same Ω₀ and g.
    ///
    /// With `Ω² = a − 2g cos k`, `a = Ω₀² + 2g`, the maximum sits at
    /// `cos k* = (a − √(a² − 4g²)) / 2g`.
    pub fn max_group_velocity(&self) -> f64 {
        let g = self.g;
        let a = self.omega0 * self.omega0 + 2.0 * g;
        let c = (a - (a * a - 4.0 * g * g).max(0.0).sqrt()) / (2.0 * g);
        let v2 = g * g * (1.0 - c * c) / (a - 2.0 * g * c);
        v2.max(0.0).sqrt()
    }

    /// Round-trip time of a chain signal, `2M / ω₁` in natural units.
    pub fn revival_time(&self) -> f64 {
        2.0 * self.sites as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbePair {
    pub omega1: f64,
    pub omega2: f64,
    pub lambda: f64,
    pub k: f64,
    /// Chain site (1-based) of probe 1.
    pub site_m: usize,
    /// Chain site (1-based) of probe 2.
    pub site_n: usize,
    /// Sign of probe 2's coupling term, ±1.
    pub sign2: f64,
}

impl ProbePair {
    pub fn validate(&self, sites: usize) -> Result<()> {
        for (name, v) in [("omega1", self.omega1), ("omega2", self.omega2)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if !self.k.is_finite() {
            return Err(Error::InvalidParameter("K must be finite".into()));
        }
        for (name, s) in [("site_m", self.site_m), ("site_n", self.site_n)] {
            if s < 1 || s > sites {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {s} outside [1, {sites}]"
                )));
            }
        }
        if self.sign2 != 1.0 && self.sign2 != -1.0 {
            return Err(Error::InvalidParameter(format!(
                "sign2 must be +1 or -1, got {}",
                self.sign2
            )));
        }
        Ok(())
    }

    /// Probe pair with the second probe (frequency, site, sign) swapped with the first.
    pub fn swapped(&self) -> Self {
        Self {
            omega1: self.omega2,
            omega2: self.omega1,
            site_m: self.site_n,
            site_n: self.site_m,
            ..*self
        }
    }
}

/// Potential matrix `V` of the composite system.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    v: DMatrix<f64>,
}

impl QuadraticForm {
    /// Wraps `v`, symmetrizing it as `(V + Vᵀ)/2`.
    pub fn new(v: DMatrix<f64>) -> Result<Self> {
        if v.nrows() != v.ncols() {
            return Err(Error::DimensionMismatch {
                expected: v.nrows(),
                found: v.ncols(),
            });
        }
        let sym = (&v + v.transpose()) * 0.5;
        Ok(Self { v: sym })
    }

    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    /// Number of chain sites, assuming the probes-first layout.
    pub fn sites(&self) -> usize {
        self.dim().saturating_sub(PROBES)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        SymmetricEigen::new(self.v.clone())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.v.symmetric_eigenvalues().min()
    }
}

/// Row/column of probe `p` (0 or 1) in the composite ordering.
#[inline]
pub fn probe_index(p: usize) -> usize {
    debug_assert!(p < PROBES);
    p
}

/// Row/column of chain site `j` (1-based) in the composite ordering.
#[inline]
pub fn site_index(j: usize) -> usize {
    debug_assert!(j >= 1);
    PROBES + j - 1
}

/// Index range occupied by the chain in the composite ordering.
pub fn chain_indices(sites: usize) -> std::ops::Range<usize> {
    PROBES..PROBES + sites
}

/// Chain potential: `Ω₀² + 2g` on the diagonal and `−g` on the nearest-neighbour bands.
pub fn build_chain_potential(cfg: &NetworkConfig) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    let m = cfg.sites;
    let w0 = cfg.omega0 * cfg.omega0;
    let v = match &cfg.coupling_matrix {
        None => DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                w0 + 2.0 * cfg.g
            } else if i.abs_diff(j) == 1 {
                -cfg.g
            } else {
                0.0
            }
        }),
        Some(a) => {
            let mut v = -a.clone();
            for j in 0..m {
                v[(j, j)] = w0 + a.row(j).sum();
            }
            v
        }
    };
    Ok(v)
}

/// Composite potential of probes plus chain.
pub fn assemble_full_potential(cfg: &NetworkConfig, probes: &ProbePair) -> Result<QuadraticForm> {
    probes.validate(cfg.sites)?;
    let chain = build_chain_potential(cfg)?;
    let n = cfg.sites + PROBES;
    let mut v = DMatrix::zeros(n, n);
    let (p1, p2) = (probe_index(0), probe_index(1));
    v[(p1, p1)] = probes.omega1 * probes.omega1 + probes.lambda;
    v[(p2, p2)] = probes.omega2 * probes.omega2 + probes.lambda;
    v[(p1, p2)] = -probes.lambda;
    v[(p2, p1)] = -probes.lambda;
    v.view_mut((PROBES, PROBES), (cfg.sites, cfg.sites))
        .copy_from(&chain);
    let sm = site_index(probes.site_m);
    let sn = site_index(probes.site_n);
    v[(p1, sm)] += probes.k;
    v[(sm, p1)] += probes.k;
    v[(p2, sn)] += probes.sign2 * probes.k;
    v[(sn, p2)] += probes.sign2 * probes.k;
    QuadraticForm::new(v)
}

/// Smallest eigenvalue of `V`, rejected when it does not exceed `tolerance`.
pub fn check_stability(qf: &QuadraticForm, tolerance: f64) -> Result<f64> {
    let min = qf.min_eigenvalue();
    if min > tolerance {
        Ok(min)
    } else {
        Err(Error::Instability {
            min_eigenvalue: min,
            tolerance,
        })
    }
}

/// Orthonormal normal modes of the environment alone.
///
/// Column `j` of `vectors` is the mode with frequency `frequencies[j]`, sorted
/// ascending. For the homogeneous chain these are the sine modes
/// `√(2/(M+1)) sin(π(j+1)k/(M+1))`.
#[derive(Debug, Clone)]
pub struct EnvironmentModes {
    pub frequencies: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EnvironmentModes {
    pub fn new(cfg: &NetworkConfig) -> Result<Self> {
        cfg.validate()?;
        let m = cfg.sites;
        if cfg.is_homogeneous_chain() {
            let norm = (2.0 / (m as f64 + 1.0)).sqrt();
            let vectors = DMatrix::from_fn(m, m, |site, mode| {
                norm * (PI * ((mode + 1) * (site + 1)) as f64 / (m as f64 + 1.0)).sin()
            });
            let frequencies = (1..=m).map(|j| cfg.dispersion_sq(j).sqrt()).collect();
            return Ok(Self {
                frequencies,
                vectors,
            });
        }
        let v = build_chain_potential(cfg)?;
        let eig = SymmetricEigen::new(v);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let frequencies = order
            .iter()
            .map(|&i| eig.eigenvalues[i].max(0.0).sqrt())
            .collect();
        let vectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self {
            frequencies,
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Amplitude of mode `j` (0-based) on chain site `site` (1-based).
    pub fn amplitude(&self, site: usize, j: usize) -> f64 {
        self.vectors[(site - 1, j)]
    }
}
