use thiserror::Error;

/// Errors raised by the solver core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("shape mismatch: expected {expected}, got {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("CFL condition violated: {measure} = {value:.3e} exceeds {limit:.3e}")]
    CflExceeded {
        measure: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("elliptic solve `{system}` did not converge: residual {residual:.3e} after {iterations} iterations")]
    EllipticDiverged {
        system: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("non-finite value detected in {what}")]
    NonFinite { what: &'static str },

    #[error("boundary temperature evaluation failed at x = {x}, t = {t}")]
    BoundaryEvaluation { x: f64, t: f64 },

    #[error("fixed-point iteration did not converge: residual {residual:.3e} after {iterations} iterations")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("solid region is empty")]
    EmptySolidRegion,

    #[error("scaling fit needs at least two distinct positive samples, got {samples}")]
    DegenerateFit { samples: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
