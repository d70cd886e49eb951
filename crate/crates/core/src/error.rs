use thiserror::Error;

/// Errors raised by the analysis pipeline.
///
/// Variants carry the parameter value at which a condition failed whenever
/// one exists, so diagnostics can point at the offending sample.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("input error: {0}")]
    Input(String),

    #[error("parameter t = {t} outside domain [{lo}, {hi}]")]
    Domain { t: f64, lo: f64, hi: f64 },

    #[error("derivative order {order} not supported by {kind} field")]
    Order { order: usize, kind: &'static str },

    #[error("curve not regular at t = {t} (speed {speed:e})")]
    Regularity { t: f64, speed: f64 },

    #[error("singular point at t = {t}: {detail}")]
    Singular { t: f64, detail: String },

    #[error("degenerate configuration at t = {t}: {detail}")]
    Degeneracy { t: f64, detail: String },

    #[error("frame not orthonormal at t = {t} (deviation {deviation:e})")]
    Frame { t: f64, deviation: f64 },

    #[error("no frame pivot achieves sub-degree {d}; failing t = {failing:?}")]
    Pivot { d: usize, failing: Vec<f64> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl GeomError {
    /// Whether this error stems from malformed input rather than from the geometry itself.
    pub fn is_validation(&self) -> bool {
        matches!(self, GeomError::Input(_) | GeomError::Config(_) | GeomError::Domain { .. })
    }
}

pub type Result<T> = std::result::Result<T, GeomError>;
