use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use harmosync_core::lattice::{assemble_full_potential, check_stability};
use harmosync_core::scenario::{parse_config, run_scenario, run_sweep, Preset, ScenarioSpec, KEYS};
use harmosync_core::{Error, Result};

/// Probe synchronization and correlations in harmonic networks.
#[derive(Parser)]
#[command(name = "harmosync", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its outputs.
    Run {
        #[command(flatten)]
        input: Input,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the plugging site of the second probe.
    Sweep {
        #[command(flatten)]
        input: Input,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (defaults to the available parallelism).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// List presets and configuration keys.
    Presets,
    /// Parse a configuration and check that the potential is stable.
    Validate {
        #[command(flatten)]
        input: Input,
    },
}

#[derive(Args)]
struct Input {
    /// Configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Start from a named preset instead of a file.
    #[arg(long)]
    preset: Option<Preset>,
    /// Override a key, e.g. `--set horizon=500` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Input {
    fn resolve(&self) -> Result<ScenarioSpec> {
        let mut spec = match (&self.config, self.preset) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
                parse_config(&text)?
            }
            (None, Some(p)) => ScenarioSpec::preset(p),
            (None, None) => ScenarioSpec::preset(Preset::Custom),
        };
        spec.apply_overrides(self.overrides.iter().map(String::as_str))?;
        spec.validate()?;
        Ok(spec)
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        e if e.is_config_error() => 2,
        Error::Instability { .. } => 3,
        Error::Io { .. } => 4,
        _ => 1,
    }
}

fn print_metrics(metrics: &[(String, String)], files: &[PathBuf]) {
    for (k, v) in metrics {
        println!("{k} = {v}");
    }
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn workers(requested: Option<usize>) -> Result<usize> {
    match requested {
        Some(0) => Err(Error::Range {
            key: "workers".into(),
            message: "must be at least 1".into(),
        }),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, usize::from)),
    }
}

fn list_presets() {
    println!("presets:");
    for p in Preset::ALL {
        println!("  {:<28} {}", p.name(), p.description());
    }
    println!();
    println!("keys:");
    for (key, section, doc) in KEYS {
        println!("  {:<20} [{section}] {doc}", key);
    }
}

fn validate(spec: &ScenarioSpec) -> Result<f64> {
    let qf = assemble_full_potential(&spec.network(), &spec.probes)?;
    check_stability(&qf, spec.measure.stab_tol)
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { input, out } => {
            let rec = run_scenario(&input.resolve()?, &out)?;
            println!("config_hash = {}", rec.config_hash);
            print_metrics(&rec.metrics, &rec.files);
        }
        Command::Sweep {
            input,
            out,
            workers: w,
        } => {
            let spec = input.resolve()?;
            let (res, rec) = run_sweep(&spec, &out, workers(w)?)?;
            println!("config_hash = {}", rec.config_hash);
            print_metrics(&rec.metrics, &rec.files);
            for (site, err) in &res.failures {
                eprintln!("site {site}: {err}");
            }
        }
        Command::Presets => list_presets(),
        Command::Validate { input } => {
            let spec = input.resolve()?;
            let min = validate(&spec)?;
            println!(
                "ok: preset {}, smallest potential eigenvalue {min:.6e}",
                spec.preset
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
