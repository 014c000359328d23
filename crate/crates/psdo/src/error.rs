//! Crate-wide error type.

/// Errors produced by grid construction, symbol evaluation, quadrature, and
/// the dense operator algebra.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Two objects that must live on the same grid / have the same shape do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The object cannot deliver what was asked of it (e.g. a derivative order
    /// beyond the declared regularity of a symbol).
    #[error("capability exceeded: {0}")]
    Capability(String),

    /// Pointwise matrix inversion failed inside a parametrix or similar construction.
    #[error("singular matrix at x={x:?}, xi={xi:?}: {reason}")]
    Inversion {
        x: Vec<f64>,
        xi: Vec<f64>,
        reason: String,
    },

    /// An ε-extrapolated quadrature shows growing deltas instead of settling.
    #[error("quadrature not converging: {0}")]
    Divergence(String),

    /// Underlying I/O failure when exporting operators or reports.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Report serialization failure.
    #[error("serialization error: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
