//! Scenario configuration, presets, runs and output files.

mod config;
mod run;

pub use config::{
    parse_config, InitialSpec, MeasureSpec, Preset, RunSpec, ScenarioSpec, WindowSpec, KEYS,
};
pub use run::{
    config_hash, fmt_num, run_scenario, run_sweep, simulate, sweep_plug_site, Detail,
    QuantumSeries, RunRecord, Simulation, SiteRow, SweepResult, VERSION,
};
