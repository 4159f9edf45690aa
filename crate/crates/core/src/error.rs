use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("aliasing: grid_n = {grid_n} cannot represent modes |k| <= {mode_k} (need grid_n >= {})", 2 * mode_k + 1)]
    Aliasing { grid_n: usize, mode_k: usize },

    #[error("Dalang's condition fails: 2(alpha + 1) = {lhs} is not > d = {d}")]
    Dalang { lhs: f64, d: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
