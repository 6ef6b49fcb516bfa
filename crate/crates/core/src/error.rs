use thiserror::Error;

/// Crate-wide error type.
///
/// `Invalid` covers malformed inputs (bad masses, unknown labels, broken
/// files); `TooLarge` covers refusals from exhaustive oracles whose input
/// exceeds their enumeration guard. The CLI maps these onto distinct exit
/// codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("universe mismatch: {0}")]
    UniverseMismatch(String),

    #[error("instance too large for {what}: {detail}")]
    TooLarge { what: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn too_large(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::TooLarge {
            what: what.into(),
            detail: detail.into(),
        }
    }
}
