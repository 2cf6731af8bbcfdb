use crate::error::{Error, Result};

use super::SystemModes;

/// Modal form of the kernels: `γ_s(t) = Σ_j w_ss(j) cos(Ω_j t)`, `η(t) = Σ_j w_12(j) cos(Ω_j t)`.
#[derive(Debug, Clone)]
pub struct KernelModes {
    pub frequencies: Vec<f64>,
    pub w11: Vec<f64>,
    pub w22: Vec<f64>,
    pub w12: Vec<f64>,
}

impl KernelModes {
    /// `(γ₁(t), γ₂(t), η(t))`, summed in mode order.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let (mut g1, mut g2, mut e) = (0.0, 0.0, 0.0);
        for j in 0..self.frequencies.len() {
            let c = (self.frequencies[j] * t).cos();
            g1 += self.w11[j] * c;
            g2 += self.w22[j] * c;
            e += self.w12[j] * c;
        }
        (g1, g2, e)
    }
}

/// Memory kernels sampled on `t_i = i·dt`.
#[derive(Debug, Clone)]
pub struct Kernels {
    pub dt: f64,
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
    pub eta: Vec<f64>,
    pub gamma1_0: f64,
    pub gamma2_0: f64,
    pub eta_0: f64,
    /// Present when the kernels were built from a mode decomposition.
    pub modes: Option<KernelModes>,
}

impl Kernels {
    pub fn len(&self) -> usize {
        self.gamma1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma1.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    /// Kernel samples from arrays alone, without a modal form.
    pub fn from_samples(
        dt: f64,
        gamma1: Vec<f64>,
        gamma2: Vec<f64>,
        eta: Vec<f64>,
    ) -> Result<Self> {
        if gamma2.len() != gamma1.len() || eta.len() != gamma1.len() {
            return Err(Error::DimensionMismatch {
                expected: gamma1.len(),
                found: gamma2.len().min(eta.len()),
            });
        }
        if gamma1.is_empty() || !(dt > 0.0) {
            return Err(Error::InvalidParameter(
                "kernel samples need dt > 0 and at least one sample".into(),
            ));
        }
        Ok(Self {
            dt,
            gamma1_0: gamma1[0],
            gamma2_0: gamma2[0],
            eta_0: eta[0],
            gamma1,
            gamma2,
            eta,
            modes: None,
        })
    }
}

/// Samples `γ₁`, `γ₂` and `η` at `samples` points spaced by `dt`.
pub fn damping_kernels(modes: &SystemModes, dt: f64, samples: usize) -> Result<Kernels> {
    if !(dt > 0.0) || samples == 0 {
        return Err(Error::InvalidParameter(
            "kernel grid needs dt > 0 and at least one sample".into(),
        ));
    }
    let freqs = &modes.chain_frequencies;
    if let Some(j) = freqs.iter().position(|&w| w <= 1e-12) {
        return Err(Error::ZeroMode { index: j + 1 });
    }
    let mut w11 = Vec::with_capacity(freqs.len());
    let mut w22 = Vec::with_capacity(freqs.len());
    let mut w12 = Vec::with_capacity(freqs.len());
    for ((f, c1), c2) in freqs.iter().zip(&modes.c1).zip(&modes.c2) {
        let inv = 1.0 / (f * f);
        w11.push(c1 * c1 * inv);
        w22.push(c2 * c2 * inv);
        w12.push(c1 * c2 * inv);
    }
    let km = KernelModes {
        frequencies: freqs.clone(),
        w11,
        w22,
        w12,
    };
    let mut gamma1 = Vec::with_capacity(samples);
    let mut gamma2 = Vec::with_capacity(samples);
    let mut eta = Vec::with_capacity(samples);
    for i in 0..samples {
        let (a, b, c) = km.eval(i as f64 * dt);
        gamma1.push(a);
        gamma2.push(b);
        eta.push(c);
    }
    let (g10, g20, e0) = km.eval(0.0);
    Ok(Kernels {
        dt,
        gamma1,
        gamma2,
        eta,
        gamma1_0: g10,
        gamma2_0: g20,
        eta_0: e0,
        modes: Some(km),
    })
}
