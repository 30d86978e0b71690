use thiserror::Error;

/// Errors raised by geometry construction, solvers, event handling and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("{0} lies outside the box")]
    OutsideBox(String),

    #[error("operands were built on different geometries")]
    GeometryMismatch,

    #[error("{spins} spins exceed the exhaustive limit of {limit}")]
    TooLarge { spins: usize, limit: usize },

    /// Two inequivalent configurations tie: the couplings sit on the critical set.
    #[error("degenerate couplings: energy gap {gap:e} is within tolerance {tolerance:e}")]
    Degenerate { gap: f64, tolerance: f64 },

    #[error("flexibility {flexibility:e} is too close to a kink for a derivative")]
    NearKink { flexibility: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("event too rare under this distribution: no witness after {attempts} attempts")]
    TooRare { attempts: u64 },

    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("couplings are not in the event {0}")]
    NotInEvent(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
