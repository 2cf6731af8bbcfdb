use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gaussian::{
    initial_composite_state, squeezed_vacuum_local, ModalEvolver, NormalModes, ProbeState,
};
use crate::lattice::{assemble_full_potential, EnvironmentModes};
use crate::measures::{auto_window, sync_series, CorrelationReport, SyncSeries};
use crate::modes::{
    default_broadening, markov_damping_matrix, ohmic_gap_ratio, probe_stiffness,
    rayleigh_reduction, GapRatio, RayleighReport, SystemModes,
};

use super::config::{ScenarioSpec, WindowSpec};

/// In-memory result of one scenario.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub spec: ScenarioSpec,
    pub dt: f64,
    pub times: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub window: f64,
    pub stride: f64,
    pub sync: SyncSeries,
    pub quantum: Option<QuantumSeries>,
    pub system: SystemModes,
    pub rayleigh: RayleighReport,
    pub ohmic_ratio: GapRatio,
    pub revival_time: f64,
}

/// Covariance-derived series on the coarser quantum grid.
#[derive(Debug, Clone)]
pub struct QuantumSeries {
    pub dt: f64,
    pub times: Vec<f64>,
    /// Central second moments `⟨x₁²⟩`, `⟨x₂²⟩`.
    pub var1: Vec<f64>,
    pub var2: Vec<f64>,
    pub sync: SyncSeries,
    pub correlations: CorrelationReport,
}

/// Which outputs a simulation computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detail {
    Full,
    MeansOnly,
}

/// Runs the scenario without touching the filesystem.
pub fn simulate(spec: &ScenarioSpec, detail: Detail) -> Result<Simulation> {
    spec.validate()?;
    let cfg = spec.network();
    let probes = spec.probes;
    let qf = assemble_full_potential(&cfg, &probes)?;
    let modes = NormalModes::new(&qf, spec.measure.stab_tol)?;
    let env = EnvironmentModes::new(&cfg)?;
    let system = SystemModes::new(&probes, &env)?;

    let omegas = [probes.omega1, probes.omega2];
    let mut probe_states = [ProbeState::coherent(1.0, 0.0, 0.0)?; 2];
    for (a, st) in probe_states.iter_mut().enumerate() {
        *st = ProbeState {
            mean: [spec.initial.x[a], spec.initial.p[a]],
            cov: squeezed_vacuum_local(omegas[a], spec.initial.r[a], spec.initial.squeeze)?,
        };
    }
    let state = initial_composite_state(probe_states, &cfg)?;
    let evolver = ModalEvolver::new(modes, &state)?;

    let dt = spec.run.dt;
    let steps = (spec.run.horizon / dt).round() as usize;
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    let (mut xs, mut ps) = evolver.mean_series(&times, &[0, 1]);
    let (x2, p2) = (xs.pop().unwrap_or_default(), ps.pop().unwrap_or_default());
    let (x1, p1) = (xs.pop().unwrap_or_default(), ps.pop().unwrap_or_default());
    let (q1, q2): (Vec<f64>, Vec<f64>) = x1
        .iter()
        .zip(&x2)
        .map(|(&a, &b)| system.to_normal(a, b))
        .unzip();

    let window = match spec.measure.window {
        WindowSpec::Auto => auto_window(system.lambda1, system.lambda2),
        WindowSpec::Fixed(w) => w,
    };
    let with_quantum = detail == Detail::Full && spec.run.quantum;
    let qstep = spec.measure.quantum_stride;
    let grid = if with_quantum { dt * qstep as f64 } else { dt };
    let stride = snap(spec.measure.stride.unwrap_or(window / 10.0), grid);
    let sync = sync_series(&x1, &x2, dt, window, stride, spec.measure.delay)?;

    let quantum = if with_quantum {
        let qtimes: Vec<f64> = (0..=steps).step_by(qstep).map(|i| i as f64 * dt).collect();
        let blocks = evolver.covariance_blocks(&qtimes, &[0, 1]);
        let var1 = blocks.iter().map(|b| b[(0, 0)]).collect::<Vec<_>>();
        let var2 = blocks.iter().map(|b| b[(1, 1)]).collect::<Vec<_>>();
        let correlations = CorrelationReport::from_blocks(&qtimes, &blocks)?;
        let qsync = sync_series(
            &var1,
            &var2,
            grid,
            window,
            stride,
            snap(spec.measure.delay, grid),
        )?;
        Some(QuantumSeries {
            dt: grid,
            times: qtimes,
            var1,
            var2,
            sync: qsync,
            correlations,
        })
    } else {
        None
    };

    let a = probe_stiffness(&probes);
    let omega_ref = 0.5 * (system.lambda1 + system.lambda2);
    let g = markov_damping_matrix(&probes, &env, omega_ref, default_broadening(&env))?;
    let rayleigh = rayleigh_reduction(&a, &g, spec.measure.rayleigh_threshold)?;

    Ok(Simulation {
        spec: spec.clone(),
        dt,
        times,
        x1,
        x2,
        p1,
        p2,
        q1,
        q2,
        window,
        stride,
        sync,
        quantum,
        ohmic_ratio: ohmic_gap_ratio(system.theta),
        system,
        rayleigh,
        revival_time: cfg.revival_time(),
    })
}

fn snap(value: f64, grid: f64) -> f64 {
    (value / grid).round().max(1.0) * grid
}

/// Fixed 12-significant-digit scientific notation; undefined values are `nan`.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), fmt_num)
}

fn csv<const N: usize>(header: [&str; N], rows: impl Iterator<Item = [String; N]>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

impl Simulation {
    pub fn means_csv(&self) -> String {
        csv(
            ["t", "x1", "x2", "p1", "p2", "q1", "q2"],
            (0..self.times.len()).map(|i| {
                [
                    self.times[i],
                    self.x1[i],
                    self.x2[i],
                    self.p1[i],
                    self.p2[i],
                    self.q1[i],
                    self.q2[i],
                ]
                .map(fmt_num)
            }),
        )
    }

    pub fn variances_csv(&self) -> Option<String> {
        let q = self.quantum.as_ref()?;
        Some(csv(
            ["t", "var_x1", "var_x2"],
            (0..q.times.len()).map(|i| [q.times[i], q.var1[i], q.var2[i]].map(fmt_num)),
        ))
    }

    pub fn quantum_csv(&self) -> Option<String> {
        let c = &self.quantum.as_ref()?.correlations;
        Some(csv(
            ["t", "E", "MI", "S1", "S2", "S12"],
            (0..c.times.len())
                .map(|i| [c.times[i], c.e[i], c.mi[i], c.s1[i], c.s2[i], c.s12[i]].map(fmt_num)),
        ))
    }

    /// Window starts with the means indicator and, when computed, the variance indicator.
    pub fn sync_csv(&self) -> String {
        let var = self.quantum.as_ref().map(|q| &q.sync);
        csv(
            ["t", "C_means", "C_variances"],
            self.sync
                .times
                .iter()
                .zip(&self.sync.values)
                .map(|(&t, &c)| {
                    let cv = var.and_then(|s| {
                        s.times
                            .iter()
                            .position(|&u| (u - t).abs() < 1e-9)
                            .and_then(|k| s.values[k])
                    });
                    [fmt_num(t), fmt_opt(c), fmt_opt(cv)]
                }),
        )
    }

    pub fn rayleigh_txt(&self) -> String {
        let r = &self.rayleigh;
        let mut out = String::new();
        let _ = writeln!(out, "gp_11 = {}", fmt_num(r.gp[(0, 0)]));
        let _ = writeln!(out, "gp_12 = {}", fmt_num(r.gp[(0, 1)]));
        let _ = writeln!(out, "gp_22 = {}", fmt_num(r.gp[(1, 1)]));
        let _ = writeln!(out, "stiffness_1 = {}", fmt_num(r.stiffness[0]));
        let _ = writeln!(out, "stiffness_2 = {}", fmt_num(r.stiffness[1]));
        let _ = writeln!(out, "gap = {}", fmt_num(r.gap));
        let _ = writeln!(out, "tau_s = {}", fmt_num(r.tau_s));
        let _ = writeln!(out, "ratio = {}", fmt_num(r.ratio.value()));
        let _ = writeln!(out, "ohmic_ratio = {}", fmt_num(self.ohmic_ratio.value()));
        let _ = writeln!(out, "predicts_sync = {}", r.predicts_sync);
        let _ = writeln!(out, "threshold = {}", self.spec.measure.rayleigh_threshold);
        let _ = writeln!(out, "off_diagonal = {}", fmt_num(r.off_diagonal));
        let _ = writeln!(out, "commutator_norm = {}", fmt_num(r.commutator_norm));
        let _ = writeln!(out, "revival_time = {}", fmt_num(self.revival_time));
        out
    }

    /// Summary metrics as ordered key-value pairs.
    pub fn summary(&self) -> Vec<(String, String)> {
        let tr = self.revival_time;
        let mut m = vec![
            ("theta".to_string(), fmt_num(self.system.theta)),
            ("lambda1".into(), fmt_num(self.system.lambda1)),
            ("lambda2".into(), fmt_num(self.system.lambda2)),
            ("revival_time".into(), fmt_num(tr)),
            (
                "window_mode".into(),
                match self.spec.measure.window {
                    WindowSpec::Auto => "auto".into(),
                    WindowSpec::Fixed(_) => "fixed".into(),
                },
            ),
            ("window".into(), fmt_num(self.window)),
            ("stride".into(), fmt_num(self.stride)),
            ("delay".into(), fmt_num(self.sync.delay)),
        ];
        let pre: Vec<f64> = self
            .sync
            .inside(0.0, tr)
            .into_iter()
            .map(|(_, c)| c)
            .collect();
        m.push(("sync_mean_before_revival".into(), fmt_num(mean(&pre))));
        let all: Vec<f64> = self.sync.values.iter().flatten().copied().collect();
        m.push((
            "sync_min".into(),
            fmt_num(all.iter().copied().fold(f64::NAN, f64::min)),
        ));
        m.push((
            "sync_max".into(),
            fmt_num(all.iter().copied().fold(f64::NAN, f64::max)),
        ));
        m.push((
            "sync_undefined_windows".into(),
            (self.sync.len() - all.len()).to_string(),
        ));
        if let Some(q) = &self.quantum {
            let c = &q.correlations;
            let band: Vec<usize> = c.indices_in(0.5 * tr, tr).collect();
            let pick = |v: &[f64]| band.iter().map(|&i| v[i]).collect::<Vec<_>>();
            m.push(("variance_sync_delay".into(), fmt_num(q.sync.delay)));
            m.push(("e_mean_late".into(), fmt_num(mean(&pick(&c.e)))));
            m.push(("mi_mean_late".into(), fmt_num(mean(&pick(&c.mi)))));
            m.push((
                "e_max".into(),
                fmt_num(c.e.iter().copied().fold(0.0, f64::max)),
            ));
        }
        m
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Lowercase hex SHA-256 of `text`.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Summary of a completed run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub spec: ScenarioSpec,
    pub files: Vec<PathBuf>,
    pub metrics: Vec<(String, String)>,
    pub version: &'static str,
    pub config_hash: String,
}

impl RunRecord {
    pub fn metric(&self, key: &str) -> Option<&str> {
        self.metrics
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Writes files into a directory, deleting everything it wrote if dropped unfinished.
struct OutputSet {
    written: Vec<PathBuf>,
    done: bool,
}

impl OutputSet {
    fn new() -> Self {
        Self {
            written: Vec::new(),
            done: false,
        }
    }

    fn write(&mut self, path: PathBuf, body: &str) -> Result<()> {
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn finish(mut self) -> Vec<PathBuf> {
        self.done = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if !self.done {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Runs a scenario and writes its outputs into `out`.
pub fn run_scenario(spec: &ScenarioSpec, out: &Path) -> Result<RunRecord> {
    let sim = simulate(spec, Detail::Full)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let resolved = spec.render();
    let hash = config_hash(&resolved);
    let mut set = OutputSet::new();
    set.write(out.join("config.resolved"), &resolved)?;
    set.write(out.join("means.csv"), &sim.means_csv())?;
    if let Some(body) = sim.variances_csv() {
        set.write(out.join("variances.csv"), &body)?;
    }
    set.write(out.join("sync.csv"), &sim.sync_csv())?;
    if let Some(body) = sim.quantum_csv() {
        set.write(out.join("quantum.csv"), &body)?;
    }
    set.write(out.join("rayleigh.txt"), &sim.rayleigh_txt())?;

    let metrics = sim.summary();
    let mut files: Vec<PathBuf> = set.written.clone();
    files.push(out.join("record.txt"));
    let mut rec = String::new();
    let _ = writeln!(rec, "version = {VERSION}");
    let _ = writeln!(rec, "config_hash = {hash}");
    let _ = writeln!(rec, "preset = {}", spec.preset);
    for (k, v) in &metrics {
        let _ = writeln!(rec, "{k} = {v}");
    }
    for f in &files {
        let name = f.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let _ = writeln!(rec, "file = {name}");
    }
    set.write(out.join("record.txt"), &rec)?;
    let files = set.finish();
    Ok(RunRecord {
        spec: spec.clone(),
        files,
        metrics,
        version: VERSION,
        config_hash: hash,
    })
}

/// Synchronization indicator for one plugging site of the second probe.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteRow {
    pub site: usize,
    pub sync: SyncSeries,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SiteRow>,
    /// Sites that failed, with the error text.
    pub failures: Vec<(usize, String)>,
}

impl SweepResult {
    pub fn grid_csv(&self) -> String {
        csv(
            ["site", "t", "C"],
            self.rows.iter().flat_map(|r| {
                r.sync
                    .times
                    .iter()
                    .zip(&r.sync.values)
                    .map(move |(&t, &c)| [r.site.to_string(), fmt_num(t), fmt_opt(c)])
            }),
        )
    }
}

/// Means-only runs with `site_n` over `sites`, spread over `workers` threads.
///
/// Every site is computed independently, so results do not depend on `workers`.
pub fn sweep_plug_site(
    spec: &ScenarioSpec,
    sites: (usize, usize),
    workers: usize,
) -> Result<SweepResult> {
    spec.validate()?;
    let (a, b) = sites;
    if a < 1 || b > spec.sites || a > b {
        return Err(Error::Range {
            key: "sweep".into(),
            message: format!("must satisfy 1 <= a <= b <= {}, got {a}..{b}", spec.sites),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let results: Vec<(usize, Result<SyncSeries>)> = pool.install(|| {
        (a..=b)
            .into_par_iter()
            .map(|site| {
                let mut s = spec.clone();
                s.probes.site_n = site;
                (site, simulate(&s, Detail::MeansOnly).map(|sim| sim.sync))
            })
            .collect()
    });
    let mut out = SweepResult {
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for (site, r) in results {
        match r {
            Ok(sync) => out.rows.push(SiteRow { site, sync }),
            Err(e) => out.failures.push((site, e.to_string())),
        }
    }
    Ok(out)
}

/// Runs a sweep and writes `sweep.csv`, `config.resolved` and `record.txt` into `out`.
pub fn run_sweep(
    spec: &ScenarioSpec,
    out: &Path,
    workers: usize,
) -> Result<(SweepResult, RunRecord)> {
    let range = spec.run.sweep.unwrap_or((1, spec.sites));
    let result = sweep_plug_site(spec, range, workers)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let resolved = spec.render();
    let hash = config_hash(&resolved);
    let mut set = OutputSet::new();
    set.write(out.join("config.resolved"), &resolved)?;
    set.write(out.join("sweep.csv"), &result.grid_csv())?;
    let metrics = vec![
        ("sweep_from".to_string(), range.0.to_string()),
        ("sweep_to".into(), range.1.to_string()),
        ("sites_ok".into(), result.rows.len().to_string()),
        ("sites_failed".into(), result.failures.len().to_string()),
        (
            "revival_time".into(),
            fmt_num(spec.network().revival_time()),
        ),
    ];
    let mut rec = String::new();
    let _ = writeln!(rec, "version = {VERSION}");
    let _ = writeln!(rec, "config_hash = {hash}");
    let _ = writeln!(rec, "preset = {}", spec.preset);
    for (k, v) in &metrics {
        let _ = writeln!(rec, "{k} = {v}");
    }
    for (site, err) in &result.failures {
        let _ = writeln!(rec, "failure = {site}: {err}");
    }
    let _ = writeln!(
        rec,
        "file = config.resolved\nfile = sweep.csv\nfile = record.txt"
    );
    set.write(out.join("record.txt"), &rec)?;
    let files = set.finish();
    let record = RunRecord {
        spec: spec.clone(),
        files,
        metrics,
        version: VERSION,
        config_hash: hash,
    };
    Ok((result, record))
}
