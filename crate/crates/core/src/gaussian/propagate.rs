use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{check_stability, QuadraticForm, DEFAULT_STABILITY_TOLERANCE};

use super::state::{symplectic_form, GaussianState};

/// Linear phase-space map `r(t) = S r(0)` realized by a quadratic Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMap {
    pub s: DMatrix<f64>,
    pub t: f64,
}

impl SymplecticMap {
    pub fn identity(modes: usize) -> Self {
        Self {
            s: DMatrix::identity(2 * modes, 2 * modes),
            t: 0.0,
        }
    }

    pub fn modes(&self) -> usize {
        self.s.nrows() / 2
    }

    /// `max |S J Sᵀ − J|`.
    pub fn symplecticity_error(&self) -> f64 {
        let j = symplectic_form(self.modes());
        (&self.s * &j * self.s.transpose() - j).abs().max()
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &SymplecticMap) -> SymplecticMap {
        SymplecticMap {
            s: &self.s * &other.s,
            t: self.t + other.t,
        }
    }
}

/// Normal modes `V = O diag(ν²) Oᵀ` of a stable quadratic form.
#[derive(Debug, Clone)]
pub struct NormalModes {
    pub o: DMatrix<f64>,
    pub nu: Vec<f64>,
}

impl NormalModes {
    pub fn new(qf: &QuadraticForm, tolerance: f64) -> Result<Self> {
        check_stability(qf, tolerance)?;
        Ok(Self::new_unchecked(qf))
    }

    /// Decomposition without the stability gate; zero modes use the `sin(νt)/ν → t` limit.
    pub fn new_unchecked(qf: &QuadraticForm) -> Self {
        let eig = qf.eigen();
        let nu = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
        Self {
            o: eig.eigenvectors,
            nu,
        }
    }

    pub fn dim(&self) -> usize {
        self.nu.len()
    }

    pub fn max_frequency(&self) -> f64 {
        self.nu.iter().copied().fold(0.0, f64::max)
    }

    /// Per-mode `(cos νt, sin(νt)/ν, ν sin νt)`.
    fn rotation(&self, t: f64) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.nu.iter().map(move |&w| mode_rotation(w, t))
    }

    pub fn propagator(&self, t: f64) -> SymplecticMap {
        let n = self.dim();
        let mut oc = self.o.clone();
        let mut os = self.o.clone();
        let mut on = self.o.clone();
        for (k, (c, s_over, nu_s)) in self.rotation(t).enumerate() {
            oc.column_mut(k).scale_mut(c);
            os.column_mut(k).scale_mut(s_over);
            on.column_mut(k).scale_mut(-nu_s);
        }
        let ot = self.o.transpose();
        let xx = &oc * &ot;
        let xp = &os * &ot;
        let px = &on * &ot;
        let mut s = DMatrix::zeros(2 * n, 2 * n);
        s.view_mut((0, 0), (n, n)).copy_from(&xx);
        s.view_mut((0, n), (n, n)).copy_from(&xp);
        s.view_mut((n, 0), (n, n)).copy_from(&px);
        s.view_mut((n, n), (n, n)).copy_from(&xx);
        SymplecticMap { s, t }
    }
}

#[inline]
fn mode_rotation(w: f64, t: f64) -> (f64, f64, f64) {
    if w < 1e-12 {
        (1.0, t, 0.0)
    } else {
        let (s, c) = (w * t).sin_cos();
        (c, s / w, w * s)
    }
}

/// Exact propagator `S(t)` of `H = ½pᵀp + ½xᵀVx`.
pub fn propagator(qf: &QuadraticForm, t: f64) -> Result<SymplecticMap> {
    Ok(NormalModes::new(qf, DEFAULT_STABILITY_TOLERANCE)?.propagator(t))
}

/// `mean → S·mean`, `cov → S·cov·Sᵀ`.
pub fn evolve(state: &GaussianState, map: &SymplecticMap) -> Result<GaussianState> {
    if map.s.nrows() != state.mean.len() {
        return Err(Error::DimensionMismatch {
            expected: map.s.nrows(),
            found: state.mean.len(),
        });
    }
    let mean = &map.s * &state.mean;
    let cov = &map.s * &state.cov * map.s.transpose();
    GaussianState::new(mean, cov)
}

/// Evaluates moments of one initial state at arbitrary times in the normal-mode frame.
///
/// Means cost `O(N)` per requested row and time; covariance blocks cost
/// `O(N²)` per time and are batched into matrix products.
#[derive(Debug, Clone)]
pub struct ModalEvolver {
    modes: NormalModes,
    /// Normal-coordinate means: positions then momenta.
    mean0: DVector<f64>,
    /// Normal-coordinate covariance.
    cov0: DMatrix<f64>,
}

/// Which phase-space quadrature of a mode a row refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    X,
    P,
}

impl ModalEvolver {
    pub fn new(modes: NormalModes, state: &GaussianState) -> Result<Self> {
        let n = modes.dim();
        if state.modes() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: state.modes(),
            });
        }
        let ot = modes.o.transpose();
        let mut mean0 = DVector::zeros(2 * n);
        mean0
            .rows_mut(0, n)
            .copy_from(&(&ot * state.mean.rows(0, n)));
        mean0
            .rows_mut(n, n)
            .copy_from(&(&ot * state.mean.rows(n, n)));
        let mut big = DMatrix::zeros(2 * n, 2 * n);
        big.view_mut((0, 0), (n, n)).copy_from(&ot);
        big.view_mut((n, n), (n, n)).copy_from(&ot);
        let cov0 = &big * &state.cov * big.transpose();
        Ok(Self { modes, mean0, cov0 })
    }

    pub fn normal_modes(&self) -> &NormalModes {
        &self.modes
    }

    pub fn dim(&self) -> usize {
        self.modes.dim()
    }

    /// Row vector `u` with `r_i(t) = u · r̃(0)` in normal coordinates.
    fn row(&self, i: usize, q: Quadrature, t: f64, out: &mut [f64]) {
        let n = self.dim();
        for k in 0..n {
            let (c, s_over, nu_s) = mode_rotation(self.modes.nu[k], t);
            let o = self.modes.o[(i, k)];
            match q {
                Quadrature::X => {
                    out[k] = o * c;
                    out[n + k] = o * s_over;
                }
                Quadrature::P => {
                    out[k] = -o * nu_s;
                    out[n + k] = o * c;
                }
            }
        }
    }

    /// `⟨x_i(t)⟩` or `⟨p_i(t)⟩`.
    pub fn mean(&self, i: usize, q: Quadrature, t: f64) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for k in 0..n {
            let (c, s_over, nu_s) = mode_rotation(self.modes.nu[k], t);
            let o = self.modes.o[(i, k)];
            let (a, b) = (self.mean0[k], self.mean0[n + k]);
            acc += match q {
                Quadrature::X => o * (c * a + s_over * b),
                Quadrature::P => o * (c * b - nu_s * a),
            };
        }
        acc
    }

    /// Position and momentum means of `rows` at every time: `(x[r][i], p[r][i])`.
    pub fn mean_series(&self, times: &[f64], rows: &[usize]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        const CHUNK: usize = 2048;
        let n = self.dim();
        // per row: O_ik a_k and O_ik b_k
        let weights: Vec<(Vec<f64>, Vec<f64>)> = rows
            .iter()
            .map(|&i| {
                let a = (0..n)
                    .map(|k| self.modes.o[(i, k)] * self.mean0[k])
                    .collect();
                let b = (0..n)
                    .map(|k| self.modes.o[(i, k)] * self.mean0[n + k])
                    .collect();
                (a, b)
            })
            .collect();
        let chunks: Vec<Vec<(Vec<f64>, Vec<f64>)>> = times
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut rot = vec![(0.0, 0.0, 0.0); n];
                chunk
                    .iter()
                    .map(|&t| {
                        for (k, r) in rot.iter_mut().enumerate() {
                            *r = mode_rotation(self.modes.nu[k], t);
                        }
                        let mut xs = Vec::with_capacity(rows.len());
                        let mut ps = Vec::with_capacity(rows.len());
                        for (a, b) in &weights {
                            let (mut x, mut p) = (0.0, 0.0);
                            for k in 0..n {
                                let (c, s_over, nu_s) = rot[k];
                                x += c * a[k] + s_over * b[k];
                                p += c * b[k] - nu_s * a[k];
                            }
                            xs.push(x);
                            ps.push(p);
                        }
                        (xs, ps)
                    })
                    .collect()
            })
            .collect();
        let mut x = vec![Vec::with_capacity(times.len()); rows.len()];
        let mut p = vec![Vec::with_capacity(times.len()); rows.len()];
        for (xs, ps) in chunks.into_iter().flatten() {
            for r in 0..rows.len() {
                x[r].push(xs[r]);
                p[r].push(ps[r]);
            }
        }
        (x, p)
    }

    pub fn mean_vector(&self, t: f64) -> DVector<f64> {
        let n = self.dim();
        let mut a = DVector::zeros(n);
        let mut b = DVector::zeros(n);
        for k in 0..n {
            let (c, s_over, nu_s) = mode_rotation(self.modes.nu[k], t);
            a[k] = c * self.mean0[k] + s_over * self.mean0[n + k];
            b[k] = c * self.mean0[n + k] - nu_s * self.mean0[k];
        }
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&(&self.modes.o * a));
        out.rows_mut(n, n).copy_from(&(&self.modes.o * b));
        out
    }

    /// Covariance of the listed modes at each time, in `(x_a…, p_a…)` order.
    pub fn covariance_blocks(&self, times: &[f64], modes: &[usize]) -> Vec<DMatrix<f64>> {
        const BATCH: usize = 64;
        let n = self.dim();
        let k = modes.len();
        let width = 2 * k;
        let batches: Vec<Vec<DMatrix<f64>>> = times
            .par_chunks(BATCH)
            .map(|chunk| {
                let mut buf = vec![0.0; 2 * n];
                let mut u = DMatrix::zeros(2 * n, width * chunk.len());
                for (b, &t) in chunk.iter().enumerate() {
                    for (a, &i) in modes.iter().enumerate() {
                        for (col, q) in [(a, Quadrature::X), (k + a, Quadrature::P)] {
                            self.row(i, q, t, &mut buf);
                            u.column_mut(b * width + col).copy_from_slice(&buf);
                        }
                    }
                }
                let w = &self.cov0 * &u;
                (0..chunk.len())
                    .map(|b| {
                        let block =
                            u.columns(b * width, width).transpose() * w.columns(b * width, width);
                        (&block + block.transpose()) * 0.5
                    })
                    .collect()
            })
            .collect();
        batches.into_iter().flatten().collect()
    }

    /// Full state at time `t`.
    pub fn state(&self, t: f64) -> Result<GaussianState> {
        let n = self.dim();
        // rotate the normal-coordinate covariance mode by mode, then go back to sites
        let mut r = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            let (c, s_over, nu_s) = mode_rotation(self.modes.nu[k], t);
            r[(k, k)] = c;
            r[(k, n + k)] = s_over;
            r[(n + k, k)] = -nu_s;
            r[(n + k, n + k)] = c;
        }
        let cov_t = &r * &self.cov0 * r.transpose();
        let mut big = DMatrix::zeros(2 * n, 2 * n);
        big.view_mut((0, 0), (n, n)).copy_from(&self.modes.o);
        big.view_mut((n, n), (n, n)).copy_from(&self.modes.o);
        let cov = &big * cov_t * big.transpose();
        GaussianState::new(self.mean_vector(t), cov)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::state::{initial_composite_state, ProbeState};
    use crate::lattice::{assemble_full_potential, NetworkConfig, ProbePair};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn small() -> (QuadraticForm, GaussianState) {
        let cfg = NetworkConfig::chain(8, 0.4, 1.2);
        let probes = ProbePair {
            omega1: 1.0,
            omega2: 1.1,
            lambda: 0.5,
            k: 0.3,
            site_m: 1,
            site_n: 5,
            sign2: 1.0,
        };
        let qf = assemble_full_potential(&cfg, &probes).unwrap();
        let s = initial_composite_state(
            [
                ProbeState::coherent(1.0, 0.14, 0.0).unwrap(),
                ProbeState::coherent(1.1, 1.4, 0.3).unwrap(),
            ],
            &cfg,
        )
        .unwrap();
        (qf, s)
    }

    #[test]
    fn zero_time_is_identity() {
        let (qf, _) = small();
        let s = propagator(&qf, 0.0).unwrap();
        assert!((s.s - DMatrix::identity(20, 20)).abs().max() < 1e-14);
    }

    #[test]
    fn quarter_period_of_unit_oscillator() {
        let qf = QuadraticForm::new(DMatrix::identity(1, 1)).unwrap();
        let s = propagator(&qf, FRAC_PI_2).unwrap();
        let r = &s.s * DVector::from_vec(vec![0.7, -0.2]);
        assert_relative_eq!(r[0], -0.2, epsilon = 1e-15);
        assert_relative_eq!(r[1], -0.7, epsilon = 1e-15);
    }

    #[test]
    fn zero_mode_is_free_particle() {
        let qf = QuadraticForm::new(DMatrix::zeros(1, 1)).unwrap();
        assert!(propagator(&qf, 1.0).is_err());
        let s = NormalModes::new_unchecked(&qf).propagator(2.5);
        assert_relative_eq!(s.s[(0, 1)], 2.5, epsilon = 1e-15);
        assert!(s.symplecticity_error() < 1e-15);
    }

    #[test]
    fn evolver_matches_dense_propagation() {
        let (qf, s0) = small();
        let modes = NormalModes::new(&qf, DEFAULT_STABILITY_TOLERANCE).unwrap();
        let ev = ModalEvolver::new(modes.clone(), &s0).unwrap();
        for t in [0.0, 1.3, 17.9, 250.0] {
            let dense = evolve(&s0, &modes.propagator(t)).unwrap();
            let fast = ev.state(t).unwrap();
            assert!((&dense.mean - &fast.mean).abs().max() < 1e-11);
            assert!((&dense.cov - &fast.cov).abs().max() < 1e-11);
            assert_relative_eq!(ev.mean(1, Quadrature::X, t), dense.mean[1], epsilon = 1e-11);
            assert_relative_eq!(
                ev.mean(0, Quadrature::P, t),
                dense.mean[10],
                epsilon = 1e-11
            );
            let block = &ev.covariance_blocks(&[t], &[0, 1])[0];
            assert_relative_eq!(block[(0, 1)], dense.cov[(0, 1)], epsilon = 1e-11);
            assert_relative_eq!(block[(3, 3)], dense.cov[(11, 11)], epsilon = 1e-11);
            assert_relative_eq!(block[(0, 3)], dense.cov[(0, 11)], epsilon = 1e-11);
            let (x, p) = ev.mean_series(&[t], &[0, 4]);
            assert_relative_eq!(x[1][0], dense.mean[4], epsilon = 1e-11);
            assert_relative_eq!(p[0][0], dense.mean[10], epsilon = 1e-11);
        }
    }

    #[test]
    fn batched_blocks_cover_every_time() {
        let (qf, s0) = small();
        let ev = ModalEvolver::new(NormalModes::new(&qf, 1e-10).unwrap(), &s0).unwrap();
        let times: Vec<f64> = (0..150).map(|i| i as f64 * 0.37).collect();
        let blocks = ev.covariance_blocks(&times, &[1]);
        assert_eq!(blocks.len(), 150);
        let one = ev.covariance_blocks(&[times[100]], &[1]);
        assert!((&blocks[100] - &one[0]).abs().max() < 1e-14);
    }
}
