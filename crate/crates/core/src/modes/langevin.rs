//! Volterra solver for the mean values of the generalized quantum Langevin equation
//!
//! ```text
//! q̈₁ + [Λ₁² − γ₁(0)] q₁ + ∫₀ᵗ [γ₁(t−t') q̇₁(t') + η(t−t') q̇₂(t')] dt'
//!     = −γ₁(t) q₁(0) − η(t) q₂(0) + η(0) q₂(t)
//! ```
//!
//! and the same with `1 ↔ 2`. The noise term averages to zero in the chain vacuum.
//! Time stepping is the implicit trapezoidal rule on `(q, q̇)` with the memory
//! integral discretized by the trapezoidal rule on the same grid, so the scheme
//! is second order in `dt`.

use crate::error::{Error, Result};

use super::Kernels;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GqleInitial {
    pub q: [f64; 2],
    pub v: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct GqleTrajectory {
    pub dt: f64,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
}

impl GqleTrajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.q1.len()).map(move |i| i as f64 * self.dt)
    }
}

/// How the memory integral is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convolution {
    /// Use the modal form of the kernels when present, otherwise the samples.
    Auto,
    /// Direct `O(n²)` sum over the sampled kernels.
    Direct,
    /// Running sums over the kernel modes, `O(M)` per step; same quadrature as `Direct`.
    Modal,
}

pub fn solve_gqle_means(
    kernels: &Kernels,
    lambda1: f64,
    lambda2: f64,
    init: GqleInitial,
    horizon: f64,
    dt: f64,
) -> Result<GqleTrajectory> {
    solve_gqle_means_with(
        kernels,
        lambda1,
        lambda2,
        init,
        horizon,
        dt,
        Convolution::Auto,
    )
}

pub fn solve_gqle_means_with(
    kernels: &Kernels,
    lambda1: f64,
    lambda2: f64,
    init: GqleInitial,
    horizon: f64,
    dt: f64,
    method: Convolution,
) -> Result<GqleTrajectory> {
    if !(dt > 0.0) || !(horizon > 0.0) {
        return Err(Error::InvalidParameter("dt and horizon must be > 0".into()));
    }
    let limit = std::f64::consts::TAU / lambda2.max(lambda1) / 20.0;
    if dt > limit {
        return Err(Error::StepTooLarge { dt, limit });
    }
    if (kernels.dt - dt).abs() > 1e-12 * dt {
        return Err(Error::InvalidParameter(format!(
            "kernels sampled with dt = {}, solver asked for {dt}",
            kernels.dt
        )));
    }
    let steps = (horizon / dt).round() as usize;
    let use_modal = match method {
        Convolution::Direct => false,
        Convolution::Modal => {
            if kernels.modes.is_none() {
                return Err(Error::InvalidParameter(
                    "modal convolution needs kernels built from modes".into(),
                ));
            }
            true
        }
        Convolution::Auto => kernels.modes.is_some(),
    };
    if !use_modal && kernels.len() < steps + 1 {
        return Err(Error::InvalidParameter(format!(
            "kernels hold {} samples, {} needed for the horizon",
            kernels.len(),
            steps + 1
        )));
    }

    let h = dt;
    let lam_sq = [lambda1 * lambda1, lambda2 * lambda2];
    let g0 = [
        [kernels.gamma1_0, kernels.eta_0],
        [kernels.eta_0, kernels.gamma2_0],
    ];
    // A_eff = diag(Λ²) − Γ(0)
    let a_eff = [
        [lam_sq[0] - g0[0][0], -g0[0][1]],
        [-g0[1][0], lam_sq[1] - g0[1][1]],
    ];
    let mat = |m: &[[f64; 2]; 2], x: [f64; 2]| {
        [
            m[0][0] * x[0] + m[0][1] * x[1],
            m[1][0] * x[0] + m[1][1] * x[1],
        ]
    };

    let q0 = init.q;
    let v0 = init.v;
    let mut q = q0;
    let mut v = v0;
    // at t = 0 the memory integral vanishes and Γ(0) q(0) cancels the renormalization
    let mut a = [-lam_sq[0] * q0[0], -lam_sq[1] * q0[1]];

    let mut out = GqleTrajectory {
        dt,
        q1: Vec::with_capacity(steps + 1),
        q2: Vec::with_capacity(steps + 1),
    };
    out.q1.push(q[0]);
    out.q2.push(q[1]);

    let mut history: Vec<[f64; 2]> = Vec::new();
    let mut modal = if use_modal {
        Some(ModalMemory::new(
            kernels.modes.as_ref().expect("checked"),
            h,
        ))
    } else {
        history.reserve(steps + 1);
        history.push(v0);
        None
    };

    for n in 0..steps {
        // quantities at t_{n+1}
        let (gamma_t, tail) = match modal.as_mut() {
            Some(mem) => {
                mem.advance(v, n);
                (mem.kernel_now(), mem.tail())
            }
            None => {
                let i = n + 1;
                let gk = |k: usize| {
                    [
                        [kernels.gamma1[k], kernels.eta[k]],
                        [kernels.eta[k], kernels.gamma2[k]],
                    ]
                };
                let mut tail = [0.0; 2];
                for (k, vk) in history.iter().enumerate().skip(1) {
                    let g = gk(i - k);
                    let c = mat(&g, *vk);
                    tail[0] += c[0];
                    tail[1] += c[1];
                }
                (gk(i), tail)
            }
        };
        let g_v0 = mat(&gamma_t, v0);
        let known = [h * (0.5 * g_v0[0] + tail[0]), h * (0.5 * g_v0[1] + tail[1])];
        let slip = mat(&gamma_t, q0);
        let pred = mat(&a_eff, [q[0] + 0.5 * h * v[0], q[1] + 0.5 * h * v[1]]);
        let c0 = [-pred[0] - known[0] - slip[0], -pred[1] - known[1] - slip[1]];
        let mut vn = [0.0; 2];
        let mut an = [0.0; 2];
        for s in 0..2 {
            vn[s] = (v[s] + 0.5 * h * (a[s] + c0[s])) / (1.0 + 0.25 * h * h * lam_sq[s]);
            an[s] = c0[s] - 0.5 * h * lam_sq[s] * vn[s];
        }
        for s in 0..2 {
            q[s] += 0.5 * h * (v[s] + vn[s]);
        }
        v = vn;
        a = an;
        if modal.is_none() {
            history.push(v);
        }
        out.q1.push(q[0]);
        out.q2.push(q[1]);
    }
    Ok(out)
}

/// Running sums `R_j(n) = Σ_{k=1}^{n−1} e^{iΩ_j(t_n − t_k)} v_k` for each kernel mode.
struct ModalMemory<'a> {
    modes: &'a super::KernelModes,
    rot: Vec<(f64, f64)>,
    phase: Vec<(f64, f64)>,
    r1: Vec<(f64, f64)>,
    r2: Vec<(f64, f64)>,
}

impl<'a> ModalMemory<'a> {
    fn new(modes: &'a super::KernelModes, h: f64) -> Self {
        let m = modes.frequencies.len();
        Self {
            modes,
            rot: modes
                .frequencies
                .iter()
                .map(|w| (w * h).sin_cos())
                .map(|(s, c)| (c, s))
                .collect(),
            phase: vec![(1.0, 0.0); m],
            r1: vec![(0.0, 0.0); m],
            r2: vec![(0.0, 0.0); m],
        }
    }

    /// Moves from `t_n` to `t_{n+1}`, folding in `v_n` (skipped for n = 0, whose
    /// half weight is handled by the caller).
    fn advance(&mut self, v: [f64; 2], n: usize) {
        let include = n >= 1;
        for j in 0..self.rot.len() {
            let (c, s) = self.rot[j];
            let mul = |(re, im): (f64, f64)| (re * c - im * s, re * s + im * c);
            let (mut a, mut b) = (self.r1[j], self.r2[j]);
            if include {
                a.0 += v[0];
                b.0 += v[1];
            }
            self.r1[j] = mul(a);
            self.r2[j] = mul(b);
            let p = self.phase[j];
            self.phase[j] = mul(p);
        }
    }

    /// `Γ(t_{n+1})` from the rotated phases.
    fn kernel_now(&self) -> [[f64; 2]; 2] {
        let (mut g1, mut g2, mut e) = (0.0, 0.0, 0.0);
        for j in 0..self.phase.len() {
            let c = self.phase[j].0;
            g1 += self.modes.w11[j] * c;
            g2 += self.modes.w22[j] * c;
            e += self.modes.w12[j] * c;
        }
        [[g1, e], [e, g2]]
    }

    /// `Σ_{k=1}^{n} Γ(t_{n+1} − t_k) v_k`.
    fn tail(&self) -> [f64; 2] {
        let mut out = [0.0; 2];
        for j in 0..self.r1.len() {
            let a = self.r1[j].0;
            let b = self.r2[j].0;
            out[0] += self.modes.w11[j] * a + self.modes.w12[j] * b;
            out[1] += self.modes.w12[j] * a + self.modes.w22[j] * b;
        }
        out
    }
}
