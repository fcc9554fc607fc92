use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} lies outside [{lo}, {hi}]")]
    Domain {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid probability table: {0}")]
    InvalidPmf(String),

    #[error("infeasible constraint set: {0}")]
    Infeasible(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<f64> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(value)
    } else {
        Err(Error::Domain { name, value, lo, hi })
    }
}
