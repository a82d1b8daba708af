use thiserror::Error;

/// Errors produced by the modal engine and the batch runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("power {power} exceeds the supported maximum {max}")]
    PowerOverflow { power: u32, max: u32 },

    #[error("capability exceeded: {0}")]
    Capability(String),

    /// Orthonormalization met a pivot below the relative tolerance.
    #[error("rank-deficient basis: function {index} has pivot {pivot:e} (leading pivot {leading:e})")]
    RankDeficient {
        index: usize,
        pivot: f64,
        leading: f64,
    },

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
