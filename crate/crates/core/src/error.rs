use thiserror::Error;

/// Errors raised by the entanglement routines.
///
/// `InvalidInput` variants map to rejected parameters; `Numerical` variants
/// signal that a well-posed computation could not be completed.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("stability violated: 1 + c1 - c2 = {margin} must be > 0 (c1 = {c1}, c2 = {c2})")]
    Unstable { c1: f64, c2: f64, margin: f64 },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("empty coefficient sequence")]
    EmptyState,

    #[error("{0}")]
    Degenerate(&'static str),

    #[error("eigensolver did not converge on block Q = {total_quanta} (dimension {dim})")]
    NoConvergence { total_quanta: usize, dim: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),
}

impl Error {
    /// True when the error stems from bad caller input rather than numerics.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::Unstable { .. }
                | Error::InvalidParameter { .. }
                | Error::EmptyState
                | Error::Degenerate(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
