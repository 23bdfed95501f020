use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("check matrices violate the duality condition (row {x_row} of h_x, row {z_row} of h_z)")]
    Duality { x_row: usize, z_row: usize },
    #[error("code encodes {0} logical qubits, expected exactly 1")]
    LogicalCount(usize),
    #[error("invalid code parameter: {0}")]
    InvalidCode(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("malformed circuit: {0}")]
    Circuit(String),
    #[error("invalid fault assignment: {0}")]
    Fault(String),
    #[error("resource budget exceeded: {needed} evaluations requested, cap is {cap}")]
    Budget { needed: u64, cap: u64 },
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("recursion diverges: {0}")]
    Divergent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
