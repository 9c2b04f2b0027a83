use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid arguments or domain data (bad shape spec, zero resolution, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Inputs whose shapes or resolutions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A malformed binary stream. `offset` is the byte position where decoding failed.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("training failed at step {step}: {message}")]
    Training { step: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
