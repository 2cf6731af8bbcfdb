use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gaussian::Squeezing;
use crate::lattice::{NetworkConfig, ProbePair, DEFAULT_STABILITY_TOLERANCE};
use crate::modes::DEFAULT_SYNC_THRESHOLD;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2Dissipation,
    Fig3CommonNode,
    Fig4Edges,
    Fig5EntanglementCommon,
    Fig6MiEdges,
    AppBSweep,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Fig2Dissipation,
        Preset::Fig3CommonNode,
        Preset::Fig4Edges,
        Preset::Fig5EntanglementCommon,
        Preset::Fig6MiEdges,
        Preset::AppBSweep,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2Dissipation => "fig2_dissipation",
            Preset::Fig3CommonNode => "fig3_common_node",
            Preset::Fig4Edges => "fig4_edges",
            Preset::Fig5EntanglementCommon => "fig5_entanglement_common",
            Preset::Fig6MiEdges => "fig6_mi_edges",
            Preset::AppBSweep => "appB_sweep",
            Preset::Custom => "custom",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::Fig2Dissipation => "coupled probes on the first site; dissipation-driven anti-synchronization",
            Preset::Fig3CommonNode => "uncoupled detuned probes on the first site (K = 0.8 strong, try K = 0.1 weak)",
            Preset::Fig4Edges => "probes at the two chain ends; cross-talk synchronization (asymmetric: x1 = x2 = 2, p2 = 10)",
            Preset::Fig5EntanglementCommon => "squeezed probes on the first site; entanglement and mutual information",
            Preset::Fig6MiEdges => "squeezed probes at the two chain ends; mutual information without entanglement",
            Preset::AppBSweep => "weakly coupled probes; second probe swept over the chain",
            Preset::Custom => "fig2 chain and probes as a starting point for free configuration",
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset `{s}`"))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Pearson window length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowSpec {
    /// One beat period of the probe normal modes, clamped to `[20, 200]`.
    Auto,
    Fixed(f64),
}

impl fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowSpec::Auto => f.write_str("auto"),
            WindowSpec::Fixed(w) => write!(f, "{w}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialSpec {
    pub x: [f64; 2],
    pub p: [f64; 2],
    pub r: [f64; 2],
    pub squeeze: Squeezing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpec {
    pub window: WindowSpec,
    /// `None` means a tenth of the window.
    pub stride: Option<f64>,
    pub delay: f64,
    /// Covariance sampling period in output steps.
    pub quantum_stride: usize,
    pub rayleigh_threshold: f64,
    pub stab_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub horizon: f64,
    pub dt: f64,
    /// Compute covariance-based outputs.
    pub quantum: bool,
    /// Inclusive site range for sweeps; `None` is the whole chain.
    pub sweep: Option<(usize, usize)>,
}

/// Fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub preset: Preset,
    pub sites: usize,
    pub omega0: f64,
    pub g: f64,
    pub probes: ProbePair,
    pub initial: InitialSpec,
    pub measure: MeasureSpec,
    pub run: RunSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Network,
    Probes,
    Initial,
    Measure,
    Run,
}

impl Section {
    fn name(self) -> &'static str {
        match self {
            Section::Network => "network",
            Section::Probes => "probes",
            Section::Initial => "initial",
            Section::Measure => "measure",
            Section::Run => "run",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            Section::Network,
            Section::Probes,
            Section::Initial,
            Section::Measure,
            Section::Run,
        ]
        .into_iter()
        .find(|x| x.name() == s)
    }
}

/// Every accepted key with its section and a short description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("M", "network", "number of chain sites"),
    ("omega0", "network", "on-site chain frequency"),
    ("g", "network", "nearest-neighbour spring constant"),
    ("omega1", "probes", "bare frequency of probe 1"),
    ("omega2", "probes", "bare frequency of probe 2"),
    ("lambda", "probes", "direct probe-probe spring"),
    ("K", "probes", "probe-chain coupling"),
    ("site_m", "probes", "chain site of probe 1 (1..M)"),
    ("site_n", "probes", "chain site of probe 2 (1..M)"),
    ("sign2", "probes", "sign of the probe-2 coupling (+1 or -1)"),
    ("x1", "initial", "initial mean position of probe 1"),
    ("x2", "initial", "initial mean position of probe 2"),
    ("p1", "initial", "initial mean momentum of probe 1"),
    ("p2", "initial", "initial mean momentum of probe 2"),
    ("r1", "initial", "squeezing parameter of probe 1"),
    ("r2", "initial", "squeezing parameter of probe 2"),
    (
        "squeeze",
        "initial",
        "squeezed quadrature: position or momentum",
    ),
    ("window", "measure", "Pearson window length or `auto`"),
    (
        "stride",
        "measure",
        "spacing of window starts or `auto` (window/10)",
    ),
    ("delay", "measure", "shift applied to the probe-2 signal"),
    (
        "quantum_stride",
        "measure",
        "covariance sampling period in output steps",
    ),
    (
        "rayleigh_threshold",
        "measure",
        "gap fraction above which synchronization is predicted",
    ),
    (
        "stab_tol",
        "measure",
        "smallest admissible eigenvalue of the potential",
    ),
    ("preset", "run", "named parameter set"),
    ("horizon", "run", "simulated time"),
    ("dt", "run", "output sampling step"),
    (
        "quantum",
        "run",
        "write variances and quantum correlations (true/false)",
    ),
    ("sweep", "run", "site range for sweeps, `a..b` or `all`"),
];

fn section_of(key: &str) -> Option<Section> {
    KEYS.iter()
        .find(|(k, _, _)| *k == key)
        .and_then(|(_, s, _)| Section::parse(s))
}

impl ScenarioSpec {
    pub fn preset(preset: Preset) -> Self {
        let mut s = ScenarioSpec {
            preset,
            sites: 300,
            omega0: 0.4,
            g: 1.2,
            probes: ProbePair {
                omega1: 1.0,
                omega2: 1.1,
                lambda: 0.5,
                k: 0.2,
                site_m: 1,
                site_n: 1,
                sign2: 1.0,
            },
            initial: InitialSpec {
                x: [0.14, 1.4],
                p: [0.0, 0.0],
                r: [0.0, 0.0],
                squeeze: Squeezing::Position,
            },
            measure: MeasureSpec {
                window: WindowSpec::Auto,
                stride: None,
                delay: 0.0,
                quantum_stride: 10,
                rayleigh_threshold: DEFAULT_SYNC_THRESHOLD,
                stab_tol: DEFAULT_STABILITY_TOLERANCE,
            },
            run: RunSpec {
                horizon: 1300.0,
                dt: 0.02,
                quantum: true,
                sweep: None,
            },
        };
        match preset {
            Preset::Fig2Dissipation | Preset::Custom => {}
            Preset::Fig3CommonNode => {
                s.probes.lambda = 0.0;
                s.probes.k = 0.8;
                s.initial.x = [1.4, 1.4];
                s.run.horizon = 700.0;
            }
            Preset::Fig4Edges => {
                s.probes.lambda = 0.0;
                s.probes.site_n = 300;
                s.initial.x = [1.4, 1.4];
                s.run.horizon = 900.0;
            }
            Preset::Fig5EntanglementCommon => {
                s.probes.omega2 = 1.2;
                s.probes.lambda = 0.0;
                s.probes.k = 0.8;
                s.initial.x = [0.0, 0.0];
                s.initial.r = [2.0, 2.0];
                s.run.horizon = 700.0;
            }
            Preset::Fig6MiEdges => {
                s.probes.omega2 = 1.2;
                s.probes.lambda = 0.0;
                s.probes.site_n = 300;
                s.initial.x = [0.0, 0.0];
                s.initial.r = [2.0, 2.0];
                s.run.horizon = 900.0;
            }
            Preset::AppBSweep => {
                s.probes.k = 0.06;
                s.run.horizon = 600.0;
                s.run.quantum = false;
            }
        }
        s
    }

    pub fn network(&self) -> NetworkConfig {
        NetworkConfig::chain(self.sites, self.omega0, self.g)
    }

    /// Sets one key from its textual value; `line` is used for error messages.
    pub fn set(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<()> {
        let bad = |msg: String| match line {
            Some(line) => Error::Parse { line, message: msg },
            None => Error::InvalidParameter(msg),
        };
        let num = || -> Result<f64> {
            value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("`{key}` expects a number, got `{value}`")))
        };
        let int = || -> Result<usize> {
            value.parse::<usize>().map_err(|_| {
                bad(format!(
                    "`{key}` expects a non-negative integer, got `{value}`"
                ))
            })
        };
        let auto_or_num = || -> Result<Option<f64>> {
            if value == "auto" {
                Ok(None)
            } else {
                num().map(Some)
            }
        };
        match key {
            "M" => self.sites = int()?,
            "omega0" => self.omega0 = num()?,
            "g" => self.g = num()?,
            "omega1" => self.probes.omega1 = num()?,
            "omega2" => self.probes.omega2 = num()?,
            "lambda" => self.probes.lambda = num()?,
            "K" => self.probes.k = num()?,
            "site_m" => self.probes.site_m = int()?,
            "site_n" => self.probes.site_n = int()?,
            "sign2" => self.probes.sign2 = num()?,
            "x1" => self.initial.x[0] = num()?,
            "x2" => self.initial.x[1] = num()?,
            "p1" => self.initial.p[0] = num()?,
            "p2" => self.initial.p[1] = num()?,
            "r1" => self.initial.r[0] = num()?,
            "r2" => self.initial.r[1] = num()?,
            "squeeze" => {
                self.initial.squeeze = match value {
                    "position" => Squeezing::Position,
                    "momentum" => Squeezing::Momentum,
                    _ => {
                        return Err(bad(format!(
                            "`squeeze` expects position or momentum, got `{value}`"
                        )))
                    }
                }
            }
            "window" => {
                self.measure.window = auto_or_num()?.map_or(WindowSpec::Auto, WindowSpec::Fixed)
            }
            "stride" => self.measure.stride = auto_or_num()?,
            "delay" => self.measure.delay = num()?,
            "quantum_stride" => self.measure.quantum_stride = int()?,
            "rayleigh_threshold" => self.measure.rayleigh_threshold = num()?,
            "stab_tol" => self.measure.stab_tol = num()?,
            "preset" => {
                let p: Preset = value.parse().map_err(bad)?;
                if p != self.preset {
                    return Err(bad(
                        "`preset` may only be given once, before other keys".into()
                    ));
                }
            }
            "horizon" => self.run.horizon = num()?,
            "dt" => self.run.dt = num()?,
            "quantum" => {
                self.run.quantum = match value {
                    "true" => true,
                    "false" => false,
                    _ => {
                        return Err(bad(format!(
                            "`quantum` expects true or false, got `{value}`"
                        )))
                    }
                }
            }
            "sweep" => {
                self.run.sweep = if value == "all" {
                    None
                } else {
                    let (a, b) = value.split_once("..").ok_or_else(|| {
                        bad(format!("`sweep` expects `a..b` or `all`, got `{value}`"))
                    })?;
                    let parse = |s: &str| {
                        s.trim()
                            .parse::<usize>()
                            .map_err(|_| bad(format!("`sweep` bound `{s}` is not an integer")))
                    };
                    Some((parse(a)?, parse(b)?))
                }
            }
            _ => {
                return Err(Error::UnknownKey {
                    key: key.to_string(),
                    line,
                })
            }
        }
        Ok(())
    }

    /// Applies `key=value` overrides after the config text.
    pub fn apply_overrides<'a>(
        &mut self,
        overrides: impl IntoIterator<Item = &'a str>,
    ) -> Result<()> {
        for item in overrides {
            let (k, v) = item.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("override `{item}` is not key=value"))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k == "preset" {
                let p: Preset = v.parse().map_err(Error::InvalidParameter)?;
                if p != self.preset {
                    return Err(Error::InvalidParameter(
                        "the preset cannot be changed by an override".into(),
                    ));
                }
                continue;
            }
            self.set(k, v, None)?;
        }
        Ok(())
    }

    /// Range checks on every value.
    pub fn validate(&self) -> Result<()> {
        let range = |key: &str, message: String| {
            Err(Error::Range {
                key: key.into(),
                message,
            })
        };
        let p = &self.probes;
        if self.sites < 2 {
            return range("M", format!("must be >= 2, got {}", self.sites));
        }
        if !(self.omega0 >= 0.0) {
            return range("omega0", format!("must be >= 0, got {}", self.omega0));
        }
        if !(self.g > 0.0) {
            return range("g", format!("must be > 0, got {}", self.g));
        }
        for (key, w) in [("omega1", p.omega1), ("omega2", p.omega2)] {
            if !(w > 0.0) {
                return range(key, format!("must be > 0, got {w}"));
            }
        }
        for (key, s) in [("site_m", p.site_m), ("site_n", p.site_n)] {
            if s < 1 || s > self.sites {
                return range(key, format!("must lie in 1..={}, got {s}", self.sites));
            }
        }
        if p.sign2 != 1.0 && p.sign2 != -1.0 {
            return range("sign2", format!("must be +1 or -1, got {}", p.sign2));
        }
        if let WindowSpec::Fixed(w) = self.measure.window {
            if !(w > 0.0) {
                return range("window", format!("must be > 0, got {w}"));
            }
        }
        if let Some(s) = self.measure.stride {
            if !(s > 0.0) {
                return range("stride", format!("must be > 0, got {s}"));
            }
        }
        if self.measure.quantum_stride == 0 {
            return range("quantum_stride", "must be >= 1".into());
        }
        let th = self.measure.rayleigh_threshold;
        if !(th > 0.0 && th <= 1.0) {
            return range(
                "rayleigh_threshold",
                format!("must lie in (0, 1], got {th}"),
            );
        }
        if !(self.measure.stab_tol >= 0.0) {
            return range(
                "stab_tol",
                format!("must be >= 0, got {}", self.measure.stab_tol),
            );
        }
        if !(self.run.horizon > 0.0) {
            return range("horizon", format!("must be > 0, got {}", self.run.horizon));
        }
        if !(self.run.dt > 0.0) || self.run.dt > self.run.horizon {
            return range(
                "dt",
                format!("must lie in (0, horizon], got {}", self.run.dt),
            );
        }
        let delay_steps = self.measure.delay / self.run.dt;
        if (delay_steps - delay_steps.round()).abs() > 1e-6 {
            return range(
                "delay",
                format!("must be a multiple of dt = {}", self.run.dt),
            );
        }
        if let Some((a, b)) = self.run.sweep {
            if a < 1 || b > self.sites || a > b {
                return range(
                    "sweep",
                    format!("must satisfy 1 <= a <= b <= {}, got {a}..{b}", self.sites),
                );
            }
        }
        Ok(())
    }

    /// Canonical text form; parsing it reproduces `self`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let p = &self.probes;
        let i = &self.initial;
        let m = &self.measure;
        let r = &self.run;
        let squeeze = match i.squeeze {
            Squeezing::Position => "position",
            Squeezing::Momentum => "momentum",
        };
        let stride = m.stride.map_or("auto".to_string(), |s| s.to_string());
        let sweep = r
            .sweep
            .map_or("all".to_string(), |(a, b)| format!("{a}..{b}"));
        let _ = writeln!(out, "preset = {}", self.preset);
        let _ = writeln!(out, "\n[network]");
        let _ = writeln!(
            out,
            "M = {}\nomega0 = {}\ng = {}",
            self.sites, self.omega0, self.g
        );
        let _ = writeln!(out, "\n[probes]");
        let _ = writeln!(
            out,
            "omega1 = {}\nomega2 = {}\nlambda = {}\nK = {}\nsite_m = {}\nsite_n = {}\nsign2 = {}",
            p.omega1, p.omega2, p.lambda, p.k, p.site_m, p.site_n, p.sign2
        );
        let _ = writeln!(out, "\n[initial]");
        let _ = writeln!(
            out,
            "x1 = {}\nx2 = {}\np1 = {}\np2 = {}\nr1 = {}\nr2 = {}\nsqueeze = {squeeze}",
            i.x[0], i.x[1], i.p[0], i.p[1], i.r[0], i.r[1]
        );
        let _ = writeln!(out, "\n[measure]");
        let _ = writeln!(
            out,
            "window = {}\nstride = {stride}\ndelay = {}\nquantum_stride = {}\nrayleigh_threshold = {}\nstab_tol = {:e}",
            m.window, m.delay, m.quantum_stride, m.rayleigh_threshold, m.stab_tol
        );
        let _ = writeln!(out, "\n[run]");
        let _ = writeln!(
            out,
            "horizon = {}\ndt = {}\nquantum = {}\nsweep = {sweep}",
            r.horizon, r.dt, r.quantum
        );
        out
    }
}

/// Parses `key = value` text with `[section]` headers and `#` comments.
///
/// The preset is applied first wherever it appears; the remaining keys override
/// it in file order. The result is range-checked.
pub fn parse_config(text: &str) -> Result<ScenarioSpec> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    let mut section: Option<Section> = None;
    let mut preset = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("unterminated section header `{line}`"),
            })?;
            section = Some(Section::parse(name.trim()).ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("unknown section `{}`", name.trim()),
            })?);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty key or value".into(),
            });
        }
        let home = section_of(key).ok_or_else(|| Error::UnknownKey {
            key: key.to_string(),
            line: Some(line_no),
        })?;
        if let Some(s) = section {
            if s != home {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "`{key}` belongs in [{}], found in [{}]",
                        home.name(),
                        s.name()
                    ),
                });
            }
        }
        if key == "preset" {
            if preset.is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "`preset` given twice".into(),
                });
            }
            preset = Some(value.parse::<Preset>().map_err(|message| Error::Parse {
                line: line_no,
                message,
            })?);
            continue;
        }
        if entries.iter().any(|(_, k, _)| k == key) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("`{key}` given twice"),
            });
        }
        entries.push((line_no, key.to_string(), value.to_string()));
    }
    let mut spec = ScenarioSpec::preset(preset.unwrap_or(Preset::Custom));
    for (line, key, value) in entries {
        spec.set(&key, &value, Some(line))?;
    }
    spec.validate()?;
    Ok(spec)
}
