use thiserror::Error;

use crate::solver::SolveResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which axis of a joint model an index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Value,
    Profitability,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::Value => f.write_str("value"),
            Axis::Profitability => f.write_str("profitability"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid joint model: {0}")]
    InvalidModel(String),

    #[error("cannot condition on {axis} cell {index}: it carries no mass")]
    ZeroMassCell { axis: Axis, index: usize },

    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("demand curve is not strictly increasing: p({lo}) = {p_lo} >= p({hi}) = {p_hi}")]
    NonIncreasingDemand {
        lo: f64,
        hi: f64,
        p_lo: f64,
        p_hi: f64,
    },

    #[error("mean profitability must be strictly positive, got {0}")]
    NonPositiveProfitMean(f64),

    #[error("no self-consistent threshold found after {iterations} iterations (best residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Box<SolveResult>,
    },

    #[error("search budget exceeded: {0}")]
    Budget(String),

    #[error("unsupported assumption: {0}")]
    Unsupported(String),

    #[error("numerical consistency check failed: {0}")]
    Consistency(String),
}
