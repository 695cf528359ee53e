use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate region: no grid node lies inside the region")]
    DegenerateRegion,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unstable step size: dt = {dt} exceeds the CFL limit {limit}")]
    UnstableStep { dt: f64, limit: f64 },

    #[error("numerical blow-up at t = {time}")]
    NumericalBlowUp { time: f64 },

    #[error("growth exponent p = {0} outside the admissible range (3, 5)")]
    InvalidExponent(f64),

    #[error("non-contractive window: residuals failed to decrease after iteration {iteration}")]
    NonContractive { iteration: usize },

    #[error("fixed-point iteration did not reach tolerance within {0} iterations")]
    MaxIterations(usize),

    #[error("fit window holds {found} samples, at least {required} are needed")]
    TooFewSamples { found: usize, required: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Whether the error stems from invalid input rather than a failed run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DegenerateRegion
                | Error::GridMismatch(_)
                | Error::InvalidExponent(_)
                | Error::InvalidArgument(_)
                | Error::Config(_)
                | Error::UnstableStep { .. }
        ) || matches!(self, Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
            || matches!(self, Error::Csv(e) if !e.is_io_error())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
