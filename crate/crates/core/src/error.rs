use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RatchetError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("singular system: zero pivot at row {row}")]
    Singular { row: usize },
    #[error("g does not change sign on [{a}, {b}] (g(A) = {g_left:e}, g(B) = {g_right:e})")]
    NoSignChange {
        a: f64,
        b: f64,
        g_left: f64,
        g_right: f64,
    },
    #[error("negative density {value:e} at node {node} (x = {x})")]
    Negative { node: usize, x: f64, value: f64 },
    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },
}

pub type Result<T> = std::result::Result<T, RatchetError>;
