use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot partition dataset: {0}")]
    Partition(String),

    #[error("cannot train model: {0}")]
    Training(String),

    #[error("cannot predict: {0}")]
    Prediction(String),

    #[error("invalid distribution parameters: {0}")]
    Parameter(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("cannot select instances: {0}")]
    Selection(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("cost efficiency undefined: positive ratio is zero")]
    UndefinedEfficiency,

    #[error("diagnostic failed: {0}")]
    Diagnostic(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("round with seed {seed} failed: {source}")]
    Round {
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn in_round(self, seed: u64) -> Self {
        match self {
            e @ Error::Round { .. } => e,
            e => Error::Round {
                seed,
                source: Box::new(e),
            },
        }
    }
}
