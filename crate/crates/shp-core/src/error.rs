use thiserror::Error;

/// Errors produced by simulation, fitting, search, and file handling.
#[derive(Debug, Error)]
pub enum ShpError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown event type `{0}`")]
    UnknownEventType(String),

    #[error("bin width must be positive and finite, got {0}")]
    BadDelta(f64),

    #[error("timestamp {timestamp} outside (0, {horizon}]")]
    BadTimestamp { timestamp: f64, horizon: f64 },

    #[error("event records not sorted by timestamp (index {0})")]
    UnsortedEvents(usize),

    #[error("graph contains a cycle: {}", cycle.join(" -> "))]
    Cyclic { cycle: Vec<String> },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("node sets differ: {0}")]
    NodeSetMismatch(String),

    #[error("alpha[{src}][{dst}] = {value} lies outside the graph support")]
    SupportViolation { src: String, dst: String, value: f64 },

    #[error("zero intensity with positive count (node `{node}`, bin {bin})")]
    ZeroIntensity { node: String, bin: usize },

    #[error("unstable parameters: branching spectral radius {rho:.6} >= 1 after {attempts} draw(s)")]
    Unstable { rho: f64, attempts: usize },

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse error category, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad configuration or inconsistent inputs.
    Validation,
    /// File system or parse failures.
    Io,
    /// Numerical failures (instability, degenerate intensities).
    Numeric,
}

impl ShpError {
    pub fn class(&self) -> ErrorClass {
        use ShpError::*;
        match self {
            InvalidConfig(_) | UnknownEventType(_) | BadDelta(_) | BadTimestamp { .. }
            | UnsortedEvents(_) | Cyclic { .. } | DimensionMismatch(_)
            | NodeSetMismatch(_) | SupportViolation { .. } => ErrorClass::Validation,
            Parse { .. } | Io { .. } => ErrorClass::Io,
            ZeroIntensity { .. } | Unstable { .. } => ErrorClass::Numeric,
        }
    }
}

pub type Result<T> = std::result::Result<T, ShpError>;
