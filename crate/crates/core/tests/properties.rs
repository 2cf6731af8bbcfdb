use harmosync_core::gaussian::{
    chain_ground_state, evolve, initial_composite_state, propagator, reduce, rk4_reference,
    squeezed_vacuum_local, two_mode_squeezed_vacuum, uncertainty_min_eigenvalue, GaussianState,
    NormalModes, ProbeState, Squeezing,
};
use harmosync_core::lattice::{
    assemble_full_potential, build_chain_potential, EnvironmentModes, NetworkConfig, ProbePair,
    QuadraticForm,
};
use harmosync_core::measures::{
    log_negativity, mutual_information, pair_entropies, pearson, symplectic_spectrum, vn_entropy,
};
use harmosync_core::modes::{system_eigenfrequencies, SystemModes};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn chain_strategy(max_sites: usize) -> impl Strategy<Value = NetworkConfig> {
    (2..=max_sites, 0.0..2.0f64, 0.05..3.0f64).prop_map(|(m, w0, g)| NetworkConfig::chain(m, w0, g))
}

fn probes_for(sites: usize) -> impl Strategy<Value = ProbePair> {
    (
        0.6..1.5f64,
        0.6..1.5f64,
        0.0..0.6f64,
        0.0..0.3f64,
        1..=sites,
        1..=sites,
        prop::bool::ANY,
    )
        .prop_map(|(w1, w2, lambda, k, m, n, flip)| ProbePair {
            omega1: w1,
            omega2: w2,
            lambda,
            k,
            site_m: m,
            site_n: n,
            sign2: if flip { -1.0 } else { 1.0 },
        })
}

/// A stable system with the chain well above zero frequency.
fn system(max_sites: usize) -> impl Strategy<Value = (NetworkConfig, ProbePair)> {
    (2..=max_sites, 0.3..1.0f64, 0.2..1.5f64)
        .prop_flat_map(|(m, w0, g)| (Just(NetworkConfig::chain(m, w0, g)), probes_for(m)))
        .prop_filter("stable", |(cfg, p)| {
            assemble_full_potential(cfg, p)
                .map(|qf| qf.min_eigenvalue() > 1e-3)
                .unwrap_or(false)
        })
}

fn state_for(cfg: &NetworkConfig, p: &ProbePair, x: [f64; 2], r: [f64; 2]) -> GaussianState {
    let probe = |w: f64, x: f64, r: f64| ProbeState {
        mean: [x, 0.3 * x],
        cov: squeezed_vacuum_local(w, r, Squeezing::Position).unwrap(),
    };
    initial_composite_state(
        [probe(p.omega1, x[0], r[0]), probe(p.omega2, x[1], r[1])],
        cfg,
    )
    .unwrap()
}

fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// A random physical two-mode covariance: thermal noise dressed by squeezing and mixing.
fn two_mode_state() -> impl Strategy<Value = DMatrix<f64>> {
    (
        0.0..2.0f64,
        0.0..2.0f64,
        -1.0..1.0f64,
        -1.0..1.0f64,
        0.0..0.8f64,
        0.1..3.0f64,
    )
        .prop_map(|(n1, n2, r1, r2, coupling, t)| {
            let mut cov = DMatrix::zeros(4, 4);
            let local = [(n1, r1), (n2, r2)];
            for (k, (n, r)) in local.iter().enumerate() {
                cov[(k, k)] = (n + 0.5) * (-2.0 * r).exp();
                cov[(k + 2, k + 2)] = (n + 0.5) * (2.0 * r).exp();
            }
            let v = DMatrix::from_row_slice(2, 2, &[1.0, -coupling, -coupling, 1.5]);
            let s = propagator(&QuadraticForm::new(v).unwrap(), t).unwrap().s;
            &s * cov * s.transpose()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn chain_spectrum_matches_dispersion(cfg in chain_strategy(64)) {
        let v = build_chain_potential(&cfg).unwrap();
        let eig = sorted_eigenvalues(&v);
        for (j, &e) in eig.iter().enumerate() {
            let want = cfg.dispersion_sq(j + 1);
            prop_assert!((e - want).abs() <= 1e-10 * (1.0 + want), "{e} vs {want}");
        }
    }

    #[test]
    fn potential_symmetric_and_probe_swap_permutes((cfg, p) in system(24)) {
        let a = assemble_full_potential(&cfg, &p).unwrap();
        let m = a.matrix();
        prop_assert!((m - m.transpose()).abs().max() == 0.0);
        let b = assemble_full_potential(&cfg, &p.swapped()).unwrap();
        let n = m.nrows();
        let perm = |i: usize| match i { 0 => 1, 1 => 0, i => i };
        // with a flipped second coupling the swap also reflects both probe coordinates
        let refl = |i: usize| if p.sign2 < 0.0 && i < 2 { -1.0 } else { 1.0 };
        for i in 0..n {
            for j in 0..n {
                let swapped = refl(i) * refl(j) * b.matrix()[(perm(i), perm(j))];
                prop_assert!((m[(i, j)] - swapped).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_coupling_spectrum_is_union(cfg in chain_strategy(30), w1 in 0.5..1.5f64, w2 in 0.5..1.5f64, l in 0.0..0.5f64) {
        let p = ProbePair { omega1: w1, omega2: w2, lambda: l, k: 0.0, site_m: 1, site_n: cfg.sites, sign2: 1.0 };
        let full = sorted_eigenvalues(assemble_full_potential(&cfg, &p).unwrap().matrix());
        let (l1, l2) = system_eigenfrequencies(w1, w2, l);
        let mut union: Vec<f64> = (1..=cfg.sites).map(|j| cfg.dispersion_sq(j)).collect();
        union.push(l1 * l1);
        union.push(l2 * l2);
        union.sort_by(f64::total_cmp);
        for (a, b) in full.iter().zip(&union) {
            prop_assert!((a - b).abs() < 1e-10 * (1.0 + b));
        }
    }

    #[test]
    fn mode_rotation_diagonalizes_probe_block((cfg, p) in system(12)) {
        let env = EnvironmentModes::new(&cfg).unwrap();
        let s = SystemModes::new(&p, &env).unwrap();
        let (c, sn) = (s.theta.cos(), s.theta.sin());
        let a = nalgebra::Matrix2::new(p.omega1 * p.omega1 + p.lambda, -p.lambda, -p.lambda, p.omega2 * p.omega2 + p.lambda);
        let r = nalgebra::Matrix2::new(c, -sn, sn, c);
        let d = r.transpose() * a * r;
        prop_assert!(d[(0, 1)].abs() < 1e-12);
        prop_assert!((d[(0, 0)] - s.lambda1 * s.lambda1).abs() < 1e-12);
        prop_assert!((d[(1, 1)] - s.lambda2 * s.lambda2).abs() < 1e-12);
        let (q1, q2) = s.to_normal(0.7, -0.3);
        let (x1, x2) = s.from_normal(q1, q2);
        prop_assert!((x1 - 0.7).abs() < 1e-12 && (x2 + 0.3).abs() < 1e-12);
    }

    #[test]
    fn propagator_is_symplectic_and_composes((cfg, p) in system(20), t1 in 0.0..50.0f64, t2 in 0.0..50.0f64) {
        let qf = assemble_full_potential(&cfg, &p).unwrap();
        let modes = NormalModes::new(&qf, 1e-10).unwrap();
        let a = modes.propagator(t1);
        let b = modes.propagator(t2);
        prop_assert!(a.symplecticity_error() <= 1e-10);
        let ab = modes.propagator(t1 + t2);
        prop_assert!((&ab.s - a.compose(&b).s).abs().max() <= 1e-9);
    }

    #[test]
    fn energy_and_uncertainty_preserved((cfg, p) in system(20), t in 0.0..200.0f64, r1 in 0.0..1.5f64, x in -2.0..2.0f64) {
        let qf = assemble_full_potential(&cfg, &p).unwrap();
        let s0 = state_for(&cfg, &p, [x, 1.0], [r1, 0.3]);
        let e0 = s0.energy(&qf).unwrap();
        let s = evolve(&s0, &propagator(&qf, t).unwrap()).unwrap();
        prop_assert!(((s.energy(&qf).unwrap() - e0) / e0).abs() <= 1e-9);
        prop_assert!(uncertainty_min_eigenvalue(&s.cov) >= -1e-9);
        for nu in symplectic_spectrum(&s.cov).unwrap() {
            prop_assert!(nu >= 0.5 - 1e-8);
        }
    }

    #[test]
    fn pearson_bounds_and_affine_invariance(f in prop::collection::vec(-5.0..5.0f64, 8..200), seed in 0.0..6.0f64, a in 0.1..10.0f64, b in -5.0..5.0f64) {
        let g: Vec<f64> = f.iter().enumerate().map(|(i, v)| v.sin() + (i as f64 * seed).cos()).collect();
        if let Ok(c) = pearson(&f, &g) {
            prop_assert!(c.abs() <= 1.0 + 1e-12);
            let up: Vec<f64> = f.iter().map(|v| a * v + b).collect();
            let down: Vec<f64> = f.iter().map(|v| -a * v + b).collect();
            prop_assert!((pearson(&up, &g).unwrap() - c).abs() < 1e-9);
            prop_assert!((pearson(&down, &g).unwrap() + c).abs() < 1e-9);
        }
    }

    #[test]
    fn two_mode_squeezed_negativity(r in 0.0..3.0f64) {
        prop_assert!((log_negativity(&two_mode_squeezed_vacuum(r)).unwrap() - 2.0 * r).abs() <= 1e-8);
    }

    #[test]
    fn correlation_invariants(cov in two_mode_state()) {
        let (s1, s2, s12) = pair_entropies(&cov).unwrap();
        prop_assert!(s12 <= s1 + s2 + 1e-9);
        prop_assert!(mutual_information(&cov).unwrap() >= -1e-9);
        prop_assert!(log_negativity(&cov).unwrap() >= 0.0);
    }

    #[test]
    fn entropy_additive_on_products(a in two_mode_state(), b in two_mode_state()) {
        // marginal of mode 0 from each, combined as a product state
        let (ma, mb) = (harmosync_core::measures::marginal(&a, 0), harmosync_core::measures::marginal(&b, 1));
        let mut prod = DMatrix::zeros(4, 4);
        for r in 0..2 {
            for c in 0..2 {
                prod[(2 * r, 2 * c)] = ma[(r, c)];
                prod[(2 * r + 1, 2 * c + 1)] = mb[(r, c)];
            }
        }
        let sum = vn_entropy(&ma).unwrap() + vn_entropy(&mb).unwrap();
        prop_assert!((vn_entropy(&prod).unwrap() - sum).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn pure_state_complementarity((cfg, p) in system(16), t in 0.0..80.0f64, r in 0.0..1.5f64) {
        let qf = assemble_full_potential(&cfg, &p).unwrap();
        let s = evolve(&state_for(&cfg, &p, [0.5, -0.5], [r, 0.5 * r]), &propagator(&qf, t).unwrap()).unwrap();
        let pair = vn_entropy(&reduce(&s, &[0, 1]).unwrap().cov).unwrap();
        let chain: Vec<usize> = (2..s.modes()).collect();
        let rest = vn_entropy(&reduce(&s, &chain).unwrap().cov).unwrap();
        prop_assert!((pair - rest).abs() <= 1e-6, "{pair} vs {rest}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn exact_matches_rk4((cfg, p) in system(16), t in 1.0..100.0f64) {
        let qf = assemble_full_potential(&cfg, &p).unwrap();
        let s0 = state_for(&cfg, &p, [1.0, -0.4], [0.5, 0.0]);
        let exact = evolve(&s0, &propagator(&qf, t).unwrap()).unwrap();
        let rk = rk4_reference(&s0, &qf, t, 0.005).unwrap();
        prop_assert!((&exact.mean - &rk.mean).abs().max() <= 1e-6);
        prop_assert!((&exact.cov - &rk.cov).abs().max() <= 1e-6);
    }
}

#[test]
fn ground_state_is_stationary() {
    let cfg = NetworkConfig::chain(10, 0.4, 1.2);
    let g = chain_ground_state(&cfg).unwrap();
    let qf = QuadraticForm::new(build_chain_potential(&cfg).unwrap()).unwrap();
    let later = evolve(&g, &propagator(&qf, 17.0).unwrap()).unwrap();
    assert!((&later.cov - &g.cov).abs().max() < 1e-12);
    assert_eq!(later.mean, DVector::zeros(20));
}
