use thiserror::Error;

/// Errors raised by the solvers and validators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge on [{a}, {b}]: estimate {estimate}, error {error}")]
    Quadrature {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
    },

    #[error("no zero of theta before r_max = {r_max} (last theta = {last_theta}); unbounded support suspected")]
    UnboundedSupport { r_max: f64, last_theta: f64 },

    #[error("step size underflow at r = {r} (h = {h})")]
    StepUnderflow { r: f64, h: f64 },

    #[error("bracket [{lo}, {hi}] does not contain a sign change")]
    Bracket { lo: f64, hi: f64 },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("exponent is singular at gamma = 4/3")]
    SingularExponent,

    #[error("fixed point iteration did not converge after {iterations} iterations (residual history tail {tail:?})")]
    NonConvergence { iterations: usize, tail: Vec<f64> },

    #[error("energy increased at iteration {iteration}: {previous} -> {current}")]
    EnergyIncrease {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
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

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
