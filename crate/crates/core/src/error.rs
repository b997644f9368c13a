use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("incompatible input: {0}")]
    Incompatible(String),
    #[error("degenerate state: {0}")]
    Degenerate(String),
    #[error("non-finite value detected: {0}")]
    NonFinite(String),
    #[error("{solver} did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("checkpoint {path}: {msg}")]
    Checkpoint { path: PathBuf, msg: String },
    #[error("series: {0}")]
    Series(String),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("wall-clock budget of {0:.1}s exceeded")]
    Budget(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
