use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no unique steady state (null space dimension {dimension})")]
    NoUniqueSteadyState { dimension: usize },

    #[error("propagation backwards in time is undefined; use swapped-operator correlators (tau = {tau})")]
    NegativeDelay { tau: f64 },

    #[error("destructive interference quenched the tail; use intensity-product normalization (tail maximum {tail_max:e})")]
    QuenchedTail { tail_max: f64 },

    #[error("normalization constant vanishes: {0}")]
    ZeroNormalization(String),

    #[error("delay grid is not uniform (step {first} vs {offending} at index {index})")]
    NonUniformGrid {
        first: f64,
        offending: f64,
        index: usize,
    },

    #[error("detector weights sum to {0}, which exceeds 1")]
    WeightsExceedUnity(f64),

    #[error("closed-form and regression evaluations disagree by {deviation:e} (relative) at cell {cell:?}")]
    CrossCheck {
        deviation: f64,
        cell: (usize, usize),
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty channel(s) in correlation: {}", format_counts(.counts))]
    EmptyChannel { counts: Vec<(u8, u64)> },

    #[error(transparent)]
    Format(#[from] crate::tagcorr::FormatError),

    #[error("serialization failed: {0}")]
    Serialization(#[from] serde_json::Error),
}

fn format_counts(counts: &[(u8, u64)]) -> String {
    counts
        .iter()
        .map(|(ch, n)| format!("channel {ch}: {n} events"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
