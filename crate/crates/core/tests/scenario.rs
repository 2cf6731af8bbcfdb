use std::fs;

use harmosync_core::measures::scan_delay;
use harmosync_core::scenario::{
    parse_config, run_scenario, run_sweep, simulate, sweep_plug_site, Detail, Preset, ScenarioSpec,
    WindowSpec,
};
use harmosync_core::Error;

fn small(preset: Preset) -> ScenarioSpec {
    let mut s = ScenarioSpec::preset(preset);
    s.sites = 24;
    s.probes.site_n = s.probes.site_n.min(24);
    s.run.horizon = 60.0;
    s.measure.window = WindowSpec::Fixed(10.0);
    s
}

#[test]
fn run_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let rec = run_scenario(&small(Preset::Fig5EntanglementCommon), dir.path()).unwrap();
    let names: Vec<String> = rec
        .files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for want in [
        "config.resolved",
        "means.csv",
        "variances.csv",
        "sync.csv",
        "quantum.csv",
        "rayleigh.txt",
        "record.txt",
    ] {
        assert!(
            names.iter().any(|n| n == want),
            "{want} missing from {names:?}"
        );
    }
    for f in &rec.files {
        let body = fs::read_to_string(f).unwrap();
        assert!(!body.is_empty(), "{f:?} empty");
        assert!(!body.contains('\r'));
    }
    let means = fs::read_to_string(dir.path().join("means.csv")).unwrap();
    assert_eq!(means.lines().next().unwrap(), "t,x1,x2,p1,p2,q1,q2");
    assert_eq!(means.lines().count(), 3002);
    let quantum = fs::read_to_string(dir.path().join("quantum.csv")).unwrap();
    assert_eq!(quantum.lines().next().unwrap(), "t,E,MI,S1,S2,S12");
    let record = fs::read_to_string(dir.path().join("record.txt")).unwrap();
    assert!(record.contains(&format!("config_hash = {}", rec.config_hash)));
    assert!(record.contains("revival_time = 4.80000000000e1"));
    assert!(record.contains("window_mode = fixed"));
    let echoed = fs::read_to_string(dir.path().join("config.resolved")).unwrap();
    assert_eq!(parse_config(&echoed).unwrap(), rec.spec);
}

#[test]
fn reruns_are_byte_identical() {
    let spec = small(Preset::Fig2Dissipation);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_scenario(&spec, a.path()).unwrap();
    run_scenario(&spec, b.path()).unwrap();
    for name in [
        "means.csv",
        "variances.csv",
        "sync.csv",
        "quantum.csv",
        "rayleigh.txt",
        "record.txt",
    ] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn failed_write_removes_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    // a directory where a file should go makes that write fail
    fs::create_dir(dir.path().join("sync.csv")).unwrap();
    let err = run_scenario(&small(Preset::Fig2Dissipation), dir.path()).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(!dir.path().join("means.csv").exists());
    assert!(!dir.path().join("config.resolved").exists());
}

#[test]
fn instability_is_reported_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = small(Preset::Custom);
    spec.probes.omega1 = 0.1;
    spec.probes.k = 2.0;
    let err = run_scenario(&spec, dir.path()).unwrap_err();
    match err {
        Error::Instability { min_eigenvalue, .. } => assert!(min_eigenvalue < 0.0),
        other => panic!("{other}"),
    }
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn uncoupled_detuned_probes_do_not_lock() {
    let mut spec = small(Preset::Custom);
    spec.probes.k = 0.0;
    spec.probes.lambda = 0.0;
    spec.run.horizon = 200.0;
    let sim = simulate(&spec, Detail::MeansOnly).unwrap();
    let c: Vec<f64> = sim.sync.values.iter().flatten().copied().collect();
    let (lo, hi) = c
        .iter()
        .fold((1.0f64, -1.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    assert!(lo < -0.5 && hi > 0.5, "C range [{lo}, {hi}]");
    assert!((sim.rayleigh.gap).abs() < 1e-15);
}

#[test]
fn sweep_independent_of_worker_count() {
    let mut spec = ScenarioSpec::preset(Preset::AppBSweep);
    spec.sites = 30;
    spec.run.horizon = 80.0;
    spec.measure.window = WindowSpec::Fixed(20.0);
    let one = sweep_plug_site(&spec, (1, 30), 1).unwrap();
    let many = sweep_plug_site(&spec, (1, 30), 5).unwrap();
    assert_eq!(one.grid_csv(), many.grid_csv());
    assert_eq!(one.rows.len(), 30);
    assert!(one.failures.is_empty());

    // the first column is the plain common-node run
    let mut first = spec.clone();
    first.probes.site_n = 1;
    let single = simulate(&first, Detail::MeansOnly).unwrap();
    assert_eq!(one.rows[0].sync, single.sync);
}

#[test]
fn sweep_records_failing_sites() {
    let mut spec = ScenarioSpec::preset(Preset::Custom);
    spec.sites = 8;
    spec.run.horizon = 30.0;
    spec.measure.window = WindowSpec::Fixed(5.0);
    spec.probes.lambda = 0.0;
    spec.probes.omega2 = 0.2;
    spec.probes.k = 0.22;
    // the second probe destabilizes the system only where the chain mode amplitude is large
    let res = sweep_plug_site(&spec, (1, 8), 2).unwrap();
    assert_eq!(res.rows.len() + res.failures.len(), 8);
    assert!(
        !res.rows.is_empty() && !res.failures.is_empty(),
        "{} ok / {} failed",
        res.rows.len(),
        res.failures.len()
    );
    for (_, msg) in &res.failures {
        assert!(msg.contains("not positive definite"));
    }
}

#[test]
fn sweep_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = ScenarioSpec::preset(Preset::AppBSweep);
    spec.sites = 12;
    spec.run.horizon = 40.0;
    spec.run.sweep = Some((3, 5));
    spec.measure.window = WindowSpec::Fixed(10.0);
    let (res, rec) = run_sweep(&spec, dir.path(), 2).unwrap();
    assert_eq!(
        res.rows.iter().map(|r| r.site).collect::<Vec<_>>(),
        vec![3, 4, 5]
    );
    let grid = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(grid.lines().next().unwrap(), "site,t,C");
    assert_eq!(rec.metric("sites_ok"), Some("3"));
}

#[test]
fn delayed_signals_restore_edge_synchronization() {
    let mut spec = ScenarioSpec::preset(Preset::Fig4Edges);
    spec.apply_overrides(["x1=2", "x2=2", "p2=10", "horizon=600"])
        .unwrap();
    let sim = simulate(&spec, Detail::MeansOnly).unwrap();
    let band = (320.0, 580.0);
    let plain: Vec<f64> = sim
        .sync
        .inside(band.0, band.1)
        .iter()
        .map(|(_, c)| c.abs())
        .collect();
    let plain_mean = plain.iter().sum::<f64>() / plain.len() as f64;
    let beat = sim.window;
    let scan = scan_delay(
        &sim.x1, &sim.x2, sim.dt, sim.window, sim.stride, band, beat, 0.1,
    )
    .unwrap();
    assert!(
        scan.score > 0.9,
        "best delay {} gives mean |C| {}",
        scan.delay,
        scan.score
    );
    assert!(scan.score >= plain_mean);
}
