use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("tag error: {0}")]
    Tag(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },
    #[error("degenerate frame inputs at node {node}")]
    Degenerate { node: usize },
    #[error("fiber error: degenerate frames at nodes {nodes:?}")]
    Fiber { nodes: Vec<usize> },
    #[error("tensor error: {0}")]
    Tensor(String),
    #[error("simulation diverged at t = {time} ms")]
    Divergence { time: f64 },
    #[error("measurement error: {0}")]
    Measurement(String),
    #[error("conductivity fit did not converge; trace (sigma, cv): {trace:?}")]
    Fit { trace: Vec<(f64, f64)> },
    #[error("coverage error: {} nodes never activated (first: {:?})", .nodes.len(), .nodes.iter().take(10).collect::<Vec<_>>())]
    Coverage { nodes: Vec<usize> },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
