use crate::error::{Error, Result};

/// Minimum number of samples in a Pearson window.
pub const MIN_WINDOW_SAMPLES: usize = 8;

const DEGENERATE_VARIANCE: f64 = 1e-30;

/// Pearson correlation of two equally long slices.
pub fn pearson(f: &[f64], g: &[f64]) -> Result<f64> {
    if f.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: f.len(),
            found: g.len(),
        });
    }
    let n = f.len();
    if n < MIN_WINDOW_SAMPLES {
        return Err(Error::WindowTooShort {
            samples: n,
            required: MIN_WINDOW_SAMPLES,
        });
    }
    let inv = 1.0 / n as f64;
    let mf = f.iter().sum::<f64>() * inv;
    let mg = g.iter().sum::<f64>() * inv;
    let (mut sfg, mut sff, mut sgg) = (0.0, 0.0, 0.0);
    for (a, b) in f.iter().zip(g) {
        let (da, db) = (a - mf, b - mg);
        sfg += da * db;
        sff += da * da;
        sgg += db * db;
    }
    if sff * inv < DEGENERATE_VARIANCE || sgg * inv < DEGENERATE_VARIANCE {
        return Err(Error::DegenerateWindow);
    }
    Ok((sfg / (sff * sgg).sqrt()).clamp(-1.0, 1.0))
}

/// Number of grid steps spanned by a window of length `window`.
pub fn window_steps(window: f64, dt: f64) -> usize {
    (window / dt).round() as usize
}

/// Pearson indicator over samples `start ..= start + steps`.
pub fn pearson_window(f: &[f64], g: &[f64], start: usize, steps: usize) -> Result<f64> {
    let end = start + steps + 1;
    if end > f.len() || end > g.len() {
        return Err(Error::InvalidParameter(format!(
            "window [{start}, {end}) exceeds series of length {}",
            f.len().min(g.len())
        )));
    }
    pearson(&f[start..end], &g[start..end])
}

/// Sliding-window indicator `C(t)` of `f(t)` against `g(t + delay)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncSeries {
    /// Window start times on the time axis of `f`.
    pub times: Vec<f64>,
    /// `None` marks a window with a constant signal.
    pub values: Vec<Option<f64>>,
    pub window: f64,
    pub stride: f64,
    pub delay: f64,
}

impl SyncSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Defined values of windows lying entirely inside `[t0, t1]`.
    pub fn inside(&self, t0: f64, t1: f64) -> Vec<(f64, f64)> {
        let eps = 1e-9;
        self.times
            .iter()
            .zip(&self.values)
            .filter(|(&t, _)| t >= t0 - eps && t + self.window <= t1 + eps)
            .filter_map(|(&t, v)| v.map(|c| (t, c)))
            .collect()
    }

    /// Defined values of windows starting inside `[t0, t1]`.
    pub fn starting_in(&self, t0: f64, t1: f64) -> Vec<(f64, f64)> {
        let eps = 1e-9;
        self.times
            .iter()
            .zip(&self.values)
            .filter(|(&t, _)| t >= t0 - eps && t <= t1 + eps)
            .filter_map(|(&t, v)| v.map(|c| (t, c)))
            .collect()
    }
}

fn grid_steps(value: f64, dt: f64, what: &str) -> Result<i64> {
    let k = (value / dt).round();
    if ((value / dt) - k).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "{what} = {value} is not a multiple of dt = {dt}"
        )));
    }
    Ok(k as i64)
}

/// Sliding Pearson indicator; windows running past either series are dropped.
pub fn sync_series(
    f: &[f64],
    g: &[f64],
    dt: f64,
    window: f64,
    stride: f64,
    delay: f64,
) -> Result<SyncSeries> {
    if !(dt > 0.0) || !(window > 0.0) || !(stride > 0.0) {
        return Err(Error::InvalidParameter(
            "dt, window and stride must be > 0".into(),
        ));
    }
    let steps = window_steps(window, dt);
    if steps + 1 < MIN_WINDOW_SAMPLES {
        return Err(Error::WindowTooShort {
            samples: steps + 1,
            required: MIN_WINDOW_SAMPLES,
        });
    }
    let stride_steps = window_steps(stride, dt).max(1);
    let d = grid_steps(delay, dt, "delay")?;
    let first = if d < 0 { (-d) as usize } else { 0 };
    let mut out = SyncSeries {
        times: Vec::new(),
        values: Vec::new(),
        window: steps as f64 * dt,
        stride: stride_steps as f64 * dt,
        delay: d as f64 * dt,
    };
    let mut i = first;
    loop {
        let j = (i as i64 + d) as usize;
        if i + steps >= f.len() || j + steps >= g.len() {
            break;
        }
        let c = match pearson(&f[i..=i + steps], &g[j..=j + steps]) {
            Ok(c) => Some(c),
            Err(Error::DegenerateWindow) => None,
            Err(e) => return Err(e),
        };
        out.times.push(i as f64 * dt);
        out.values.push(c);
        i += stride_steps;
    }
    Ok(out)
}

/// Result of a delay scan.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayScan {
    pub delay: f64,
    /// Mean `|C|` over the band at the chosen delay.
    pub score: f64,
    pub series: SyncSeries,
}

/// Uniform scan of `delay ∈ [−max_delay, max_delay]` maximizing the mean `|C|`
/// over windows lying inside `[t0, t1]`; ties go to the smaller `|delay|`.
#[allow(clippy::too_many_arguments)]
pub fn scan_delay(
    f: &[f64],
    g: &[f64],
    dt: f64,
    window: f64,
    stride: f64,
    band: (f64, f64),
    max_delay: f64,
    delay_step: f64,
) -> Result<DelayScan> {
    if !(delay_step > 0.0) || !(max_delay >= 0.0) {
        return Err(Error::InvalidParameter(
            "delay grid must have positive step".into(),
        ));
    }
    let step = grid_steps(delay_step, dt, "delay step")?.max(1);
    let reach = (max_delay / dt).floor() as i64;
    let mut order: Vec<i64> = vec![0];
    let mut k = step;
    while k <= reach {
        order.push(-k);
        order.push(k);
        k += step;
    }
    let mut best: Option<DelayScan> = None;
    for d in order {
        let series = sync_series(f, g, dt, window, stride, d as f64 * dt)?;
        let vals = series.inside(band.0, band.1);
        if vals.is_empty() {
            continue;
        }
        let score = vals.iter().map(|(_, c)| c.abs()).sum::<f64>() / vals.len() as f64;
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(DelayScan {
                delay: series.delay,
                score,
                series,
            });
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("no window fits inside the scan band".into()))
}

/// Interpolated sign changes of `f` on samples with `t ∈ [t0, t1]`.
pub fn zero_crossings(f: &[f64], dt: f64, t0: f64, t1: f64) -> Vec<f64> {
    let lo = (t0 / dt).ceil().max(0.0) as usize;
    let hi = ((t1 / dt).floor() as usize).min(f.len().saturating_sub(1));
    let mut out = Vec::new();
    for i in lo..hi {
        let (a, b) = (f[i], f[i + 1]);
        if a == 0.0 {
            out.push(i as f64 * dt);
        } else if a * b < 0.0 {
            out.push((i as f64 + a / (a - b)) * dt);
        }
    }
    out
}

/// `π / mean half-period` from the zero crossings inside `[t0, t1]`.
pub fn dominant_frequency(f: &[f64], dt: f64, t0: f64, t1: f64) -> Result<f64> {
    let z = zero_crossings(f, dt, t0, t1);
    if z.len() < 2 {
        return Err(Error::NoCrossings);
    }
    let half = (z[z.len() - 1] - z[0]) / (z.len() - 1) as f64;
    Ok(std::f64::consts::PI / half)
}

/// Local maxima `(t, |f|)` of `|f|` inside `[t0, t1]`.
pub fn envelope_peaks(f: &[f64], dt: f64, t0: f64, t1: f64) -> Vec<(f64, f64)> {
    let lo = ((t0 / dt).ceil().max(1.0)) as usize;
    let hi = ((t1 / dt).floor() as usize).min(f.len().saturating_sub(2));
    let mut out = Vec::new();
    for i in lo..=hi {
        let (a, b, c) = (f[i - 1].abs(), f[i].abs(), f[i + 1].abs());
        if b > a && b >= c {
            out.push((i as f64 * dt, b));
        }
    }
    out
}

/// Times of the local minima of the peak-height sequence of `|f|` inside `[t0, t1]`.
pub fn envelope_minima(f: &[f64], dt: f64, t0: f64, t1: f64) -> Vec<f64> {
    let peaks = envelope_peaks(f, dt, t0, t1);
    peaks
        .windows(3)
        .filter(|w| w[1].1 < w[0].1 && w[1].1 <= w[2].1)
        .map(|w| w[1].0)
        .collect()
}

pub const AUTO_WINDOW_MIN: f64 = 20.0;
pub const AUTO_WINDOW_MAX: f64 = 200.0;

/// One beat period `2π/|Λ₂ − Λ₁|`, clamped to `[20, 200]`.
pub fn auto_window(lambda1: f64, lambda2: f64) -> f64 {
    let split = (lambda2 - lambda1).abs();
    if split < 1e-12 {
        return AUTO_WINDOW_MAX;
    }
    (std::f64::consts::TAU / split).clamp(AUTO_WINDOW_MIN, AUTO_WINDOW_MAX)
}
