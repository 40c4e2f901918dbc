use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: need at least {needed} studies, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// The heterogeneity estimate cannot absorb the hypothesized bias variance.
    #[error(
        "insufficient heterogeneity: tau^2 = {tau2} must exceed the bias variance sigma^2_B* = {var_log_bias}"
    )]
    InsufficientHeterogeneity { tau2: f64, var_log_bias: f64 },

    #[error("pooled estimate is exactly 0; the direction (causative or preventive) must be given explicitly")]
    AmbiguousDirection,

    #[error("no convergence after {iterations} iterations; root bracketed in [{lo}, {hi}]")]
    Convergence { iterations: usize, lo: f64, hi: f64 },

    /// The generative parameters imply a probability outside [0, 1].
    #[error("infeasible simulation parameters: {0}")]
    Infeasible(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Convergence { .. } | Error::Infeasible(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
