use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("potential is not positive definite: smallest eigenvalue {min_eigenvalue:.6e} <= tolerance {tolerance:.1e}")]
    Instability { min_eigenvalue: f64, tolerance: f64 },

    #[error("chain mode {index} has zero frequency; kernels need a gapped chain")]
    ZeroMode { index: usize },

    #[error("time step {dt} exceeds the resolution limit {limit:.6}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error(
        "covariance violates the uncertainty principle: symplectic eigenvalue {value:.6e} < 1/2"
    )]
    UncertaintyViolation { value: f64 },

    #[error("covariance is not physical: symplectic eigenvalue {value:.6e}")]
    NonPhysical { value: f64 },

    #[error("window variance below threshold (constant signal)")]
    DegenerateWindow,

    #[error("window holds {samples} samples, at least {required} required")]
    WindowTooShort { samples: usize, required: usize },

    #[error("signal does not change sign inside the window")]
    NoCrossings,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown key `{key}`{}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    UnknownKey { key: String, line: Option<usize> },

    #[error("`{key}` out of range: {message}")]
    Range { key: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the user's configuration text or values.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Parse { .. }
                | Error::UnknownKey { .. }
                | Error::Range { .. }
                | Error::StepTooLarge { .. }
                | Error::ZeroMode { .. }
                | Error::UncertaintyViolation { .. }
        )
    }
}
