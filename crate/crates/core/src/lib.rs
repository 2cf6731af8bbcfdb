//! Two detuned harmonic probes coupled to a finite harmonic chain: exact Gaussian
//! dynamics, damping kernels and synchronization prediction, and measures of
//! synchronization and quantum correlations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gaussian;
pub mod lattice;
pub mod measures;
pub mod modes;
pub mod scenario;

pub use error::{Error, Result};
pub use gaussian::{GaussianState, ProbeState, Squeezing, SymplecticMap};
pub use lattice::{EnvironmentModes, NetworkConfig, ProbePair, QuadraticForm};
pub use measures::{CorrelationReport, SyncSeries};
pub use modes::{RayleighReport, SystemModes};
pub use scenario::{parse_config, run_scenario, simulate, sweep_plug_site, Preset, ScenarioSpec};
