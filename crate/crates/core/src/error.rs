use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid resolution {0}: at least 2 intervals are required")]
    InvalidResolution(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Newton iteration for Lobatto node {index} of {n} did not converge")]
    NodeIteration { n: usize, index: usize },

    #[error("wrong grid kind: {0}")]
    WrongGridKind(&'static str),

    #[error("Simpson's rule needs an even interval count, got {0}")]
    Parity(usize),

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    Shape {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("invalid mode index: {0}")]
    InvalidIndex(String),

    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error("under-resolved quadrature: {nodes} nodes per axis, at least {required} needed")]
    UnderResolved { nodes: usize, required: usize },

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error(
        "fixed-point iteration did not converge after {iterations} iterations (last residual {:e})",
        residuals.last().copied().unwrap_or(f64::NAN)
    )]
    NotConverged {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error(
        "unstable configuration: ht = {ht:e} exceeds the explicit limit {limit:e}; use nt >= {suggested_nt}"
    )]
    Unstable {
        ht: f64,
        limit: f64,
        suggested_nt: usize,
    },

    #[error("divergence detected at step {step}")]
    Divergence { step: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("not applicable: {0}")]
    NotApplicable(&'static str),

    #[error("invalid run spec: {0}")]
    InvalidSpec(String),

    #[error("run `{spec}` failed: {source}")]
    Run {
        spec: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// The innermost error, looking through [`Error::Run`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Run { source, .. } => source.root(),
            other => other,
        }
    }
}
