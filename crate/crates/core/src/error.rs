use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A player index, subset, or partition that does not fit the game.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input: model files, tables, manifests.
    #[error("format error: {0}")]
    Format(String),

    /// An exact computation would exceed its configured size cap.
    #[error("capacity error: {what} is {actual}, cap is {cap}")]
    Capacity {
        what: &'static str,
        actual: usize,
        cap: usize,
    },

    /// A computation whose result is undefined for the given input,
    /// e.g. projecting onto a zero feature or instability of all-zero estimates.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn capacity(what: &'static str, actual: usize, cap: usize) -> Self {
        Error::Capacity { what, actual, cap }
    }
}
