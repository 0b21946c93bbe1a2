use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("lambda = {lambda} lies within tolerance of a pole of tan(lambda * l_{edge})")]
    PoleProximity { lambda: f64, edge: usize },

    #[error("root bracketing failed to converge on {} interval(s), first: ({:.6}, {:.6})", .intervals.len(), .intervals[0].0, .intervals[0].1)]
    BisectionFailed { intervals: Vec<(f64, f64)> },

    #[error("enumeration budget exceeded: {needed} candidates, budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("{what} = {value} outside the evaluated domain (limit {limit})")]
    Domain {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("quadrature did not converge: panel refinement changed {what} by {delta:e}")]
    QuadratureNonConvergence { what: &'static str, delta: f64 },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
