//! Crate-wide error type.
//!
//! Variants map onto CLI exit codes: schema and validation problems exit
//! with 2, oracle-side failures with 3, and solver-internal failures with 4.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("negative mass at index {index}: {value}")]
    NegativeMass { index: usize, value: f64 },

    #[error("weights sum to {sum}, outside the accepted band around 1")]
    BadSum { sum: f64 },

    #[error("expected {expected} weights, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("strategy ranges over a different label set than the game expects")]
    DimensionMismatch,

    #[error("game too large for exhaustive search: {rows}x{cols} (limit {limit} per side)")]
    TooLarge {
        rows: usize,
        cols: usize,
        limit: usize,
    },

    #[error("singular indifference system for support pair {support_a:?}/{support_d:?}")]
    DegenerateSystem {
        support_a: Vec<usize>,
        support_d: Vec<usize>,
    },

    #[error("oracle has no entry for player {player}, prompt {prompt_id:?}, worldview {worldview:?}")]
    MissingEntry {
        player: String,
        prompt_id: String,
        worldview: String,
    },

    #[error("upstream oracle endpoint failed after retries: {0}")]
    UpstreamError(String),

    #[error("could not parse oracle response: {0}")]
    UnparseableResponse(String),

    #[error("response weights are all zero")]
    AllZero,

    #[error("response names unknown action label {0:?}")]
    UnknownLabel(String),

    #[error("unknown prompt id {0:?}")]
    UnknownPrompt(String),

    #[error("no equilibrium found on lifted matrices; dump:\n{dump}")]
    NoEquilibriumFound { dump: String },

    #[error("schema error at {location}: {message}")]
    SchemaError { location: String, message: String },

    #[error("duplicate oracle key: player {player}, prompt {prompt_id:?}, worldview {worldview:?}")]
    DuplicateKey {
        player: String,
        prompt_id: String,
        worldview: String,
    },

    #[error("invalid scenario: {0}")]
    ValidationError(String),

    #[error("policy sets range over different action spaces")]
    ActionSpaceMismatch,

    #[error("{context}: {source}")]
    Annotated {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Wrap an error with pipeline context (stage, cell coordinates, prompt id).
    pub fn annotate(self, context: impl Into<String>) -> Self {
        Error::Annotated {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code for the CLI surface.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SchemaError { .. }
            | Error::ValidationError(_)
            | Error::LengthMismatch { .. }
            | Error::DimensionMismatch
            | Error::ActionSpaceMismatch
            | Error::UnknownPrompt(_)
            | Error::DuplicateKey { .. }
            | Error::TooLarge { .. }
            | Error::Io { .. } => 2,
            Error::MissingEntry { .. }
            | Error::UpstreamError(_)
            | Error::UnparseableResponse(_)
            | Error::AllZero
            | Error::UnknownLabel(_)
            | Error::NegativeMass { .. }
            | Error::BadSum { .. } => 3,
            Error::NoEquilibriumFound { .. } | Error::DegenerateSystem { .. } => 4,
            Error::Annotated { source, .. } => source.exit_code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
