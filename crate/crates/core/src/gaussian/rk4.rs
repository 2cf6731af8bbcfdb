use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lattice::QuadraticForm;

use super::state::GaussianState;

/// Classical RK4 integration of `ẋ = p, ṗ = −Vx` for the mean and of the
/// Lyapunov equation `σ̇ = Fσ + σFᵀ`, `F = [[0, I], [−V, 0]]`, for the covariance.
///
/// An independent reference for the exact propagator; `dt` must resolve the
/// fastest mode with at least 20 steps per period.
pub fn rk4_reference(
    state: &GaussianState,
    qf: &QuadraticForm,
    horizon: f64,
    dt: f64,
) -> Result<GaussianState> {
    let n = qf.dim();
    if state.modes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: state.modes(),
        });
    }
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return Err(Error::InvalidParameter(
            "dt must be > 0 and horizon >= 0".into(),
        ));
    }
    let nu_max = qf.matrix().symmetric_eigenvalues().max().max(0.0).sqrt();
    if nu_max > 0.0 {
        let limit = std::f64::consts::TAU / nu_max / 20.0;
        if dt > limit {
            return Err(Error::StepTooLarge { dt, limit });
        }
    }
    let steps = (horizon / dt).ceil() as usize;
    if steps == 0 {
        return Ok(state.clone());
    }
    let h = horizon / steps as f64;

    let mut f = DMatrix::zeros(2 * n, 2 * n);
    f.view_mut((0, n), (n, n)).fill_with_identity();
    f.view_mut((n, 0), (n, n)).copy_from(&(-qf.matrix()));

    let mean_rhs = |m: &DVector<f64>| &f * m;
    let cov_rhs = |c: &DMatrix<f64>| {
        let fc = &f * c;
        &fc + fc.transpose()
    };

    let mut mean = state.mean.clone();
    let mut cov = state.cov.clone();
    for _ in 0..steps {
        let k1 = mean_rhs(&mean);
        let k2 = mean_rhs(&(&mean + &k1 * (0.5 * h)));
        let k3 = mean_rhs(&(&mean + &k2 * (0.5 * h)));
        let k4 = mean_rhs(&(&mean + &k3 * h));
        mean += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);

        let l1 = cov_rhs(&cov);
        let l2 = cov_rhs(&(&cov + &l1 * (0.5 * h)));
        let l3 = cov_rhs(&(&cov + &l2 * (0.5 * h)));
        let l4 = cov_rhs(&(&cov + &l3 * h));
        cov += (l1 + l2 * 2.0 + l3 * 2.0 + l4) * (h / 6.0);
    }
    GaussianState::new(mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_oscillator_over_100_periods() {
        let qf = QuadraticForm::new(DMatrix::identity(1, 1)).unwrap();
        let s0 = GaussianState::new(
            DVector::from_vec(vec![1.0, 0.0]),
            DMatrix::identity(2, 2) * 0.5,
        )
        .unwrap();
        let t = 200.0 * std::f64::consts::PI;
        let s = rk4_reference(&s0, &qf, t, 1e-3).unwrap();
        assert!((s.mean[0] - t.cos()).abs() < 1e-8);
        assert!((s.mean[1] + t.sin()).abs() < 1e-8);
        assert!((s.cov[(0, 0)] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn fourth_order_convergence() {
        let qf = QuadraticForm::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0])).unwrap();
        let s0 = GaussianState::new(
            DVector::from_vec(vec![1.0, 0.5, 0.0, -0.2]),
            DMatrix::identity(4, 4) * 0.5,
        )
        .unwrap();
        let exact = super::super::propagate::propagator(&qf, 10.0).unwrap();
        let want = super::super::propagate::evolve(&s0, &exact).unwrap();
        let err = |dt: f64| {
            (rk4_reference(&s0, &qf, 10.0, dt).unwrap().mean - &want.mean)
                .abs()
                .max()
        };
        let ratio = err(0.04) / err(0.02);
        assert!((ratio - 16.0).abs() < 2.0, "ratio {ratio}");
    }

    #[test]
    fn coarse_step_rejected() {
        let qf = QuadraticForm::new(DMatrix::identity(1, 1) * 100.0).unwrap();
        let s0 = GaussianState::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(
            rk4_reference(&s0, &qf, 1.0, 0.1),
            Err(Error::StepTooLarge { .. })
        ));
    }
}
