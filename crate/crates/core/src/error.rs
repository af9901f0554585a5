use thiserror::Error;

pub type Result<T> = std::result::Result<T, SocpError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SocpError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid cone specification: {0}")]
    InvalidConeSpec(String),

    /// A vector that must lie in the interior of the cone does not.
    #[error("{what} is not in the cone interior (block {block}, lambda_min = {lambda_min:e})")]
    NotInterior {
        what: &'static str,
        block: usize,
        lambda_min: f64,
    },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("singular Newton system (pivot {pivot:e} below {threshold:e})")]
    SingularSystem { pivot: f64, threshold: f64 },

    #[error("start point is outside N2(gamma): d2 = {d2:e} > gamma * mu = {bound:e}")]
    StartOutsideNeighborhood { d2: f64, bound: f64 },

    #[error("iteration limit of {limit} reached before the stop criteria held")]
    MaxIterationsExceeded { limit: usize },

    #[error("problems do not share the same cone structure and dimensions")]
    ConeSpecMismatch,

    #[error("no admissible warm-start coefficient")]
    EmptyAdmissibleSet,
}

impl SocpError {
    /// True for failures of the numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SocpError::SingularSystem { .. } | SocpError::MaxIterationsExceeded { .. }
        )
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(SocpError::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
