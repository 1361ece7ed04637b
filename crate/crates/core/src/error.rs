use thiserror::Error;

use crate::model::Model;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("collinearity: {0}")]
    Collinearity(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("boundary tie between models {}", .0.iter().map(|m| m.label()).collect::<Vec<_>>().join(", "))]
    Tie(Vec<Model>),
    #[error("no convergence after {sweeps} sweeps (max change {max_change:e}, kkt residual {kkt:e})")]
    Convergence { sweeps: usize, max_change: f64, kkt: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
