use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge after {terms} terms (partial sum {partial:e})")]
    NonConvergence { partial: f64, terms: usize },

    #[error("quadrature tolerance not met (value {value:e}, estimated error {achieved:e})")]
    Quadrature { value: f64, achieved: f64 },

    #[error("root finding failed in [{lo}, {hi}]: {reason}")]
    RootFinding { lo: f64, hi: f64, reason: String },

    #[error("possible missed eigenvalue in bracket [{lo}, {hi}]")]
    MissedRoot { lo: f64, hi: f64 },

    #[error("{context} loses {digits:.1} digits to cancellation")]
    Conditioning { context: String, digits: f64 },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("all {0} paths were censored before exit")]
    AllCensored(usize),

    #[error("invalid table: {0}")]
    Table(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
