use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the function domain: {0}")]
    Domain(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("quadrature failed for {context}: {reason}")]
    Quadrature { context: String, reason: String },

    #[error("path of length {got} is shorter than the {needed} steps required")]
    PathLength { needed: usize, got: usize },

    #[error("market horizon {n_steps} exceeds the coefficient depth {depth}")]
    HorizonExceedsDepth { n_steps: usize, depth: usize },

    #[error("non-positive price factor {factor} at step {step}; the market scale is invalid")]
    NonPositivePrice { step: usize, factor: f64 },

    #[error("degenerate strategy horizon: {0}")]
    DegenerateHorizon(String),

    #[error("enumeration needs {free} free coordinates, above the limit of {limit}")]
    SupportTooLarge { free: usize, limit: usize },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
