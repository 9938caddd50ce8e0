use thiserror::Error;

use crate::net::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid edge ({i}, {j}): {reason}")]
    InvalidEdge { i: usize, j: usize, reason: String },

    #[error("normalization impossible: node {node} has no incident edges")]
    NormalizationImpossible { node: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("invalid network: {}", format_violations(.0))]
    InvalidNetwork(Vec<Violation>),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("node index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("profile is not mean-zero (sum {sum:e})")]
    NotMeanZero { sum: f64 },

    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,

    #[error("linear system is numerically singular (pivot {pivot:e})")]
    Singular { pivot: f64 },

    #[error(
        "budget {budget} reaches the bliss point (zero-miscoordination intervention costs {bliss_cost})"
    )]
    BlissFeasible {
        budget: f64,
        bliss_cost: f64,
        delta: Vec<f64>,
    },

    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
