use thiserror::Error;

/// Errors raised by the decomposition library.
///
/// Variants fall into two families: malformed input (bad grids, bad masses,
/// parse failures, dimension mismatches) and numerical failure (singular
/// systems, undefined conditionals, evaluation domain errors). Callers that need
/// to tell them apart use [`Error::is_numerical`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("variable x{index} out of range for arity {arity}")]
    UnknownVariable { index: usize, arity: usize },

    #[error("unknown function `{0}`")]
    UnknownFunction(String),

    #[error("domain error evaluating at {point:?}: {message}")]
    Domain { point: Vec<f64>, message: String },

    #[error("point {0:?} is not on the model grid")]
    OffGrid(Vec<f64>),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("rank deficient design: {0}")]
    RankDeficient(String),

    #[error("distribution is not in the simplex interior: zero mass at {0:?}")]
    NotInterior(Vec<f64>),

    #[error("distribution is not product-form: {0}")]
    NotProduct(String),

    #[error("undefined conditional at {point:?}: {message}")]
    UndefinedConditional { point: Vec<f64>, message: String },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures that arise from the numbers rather than the shape of
    /// the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::RankDeficient(_)
                | Error::NotInterior(_)
                | Error::NotProduct(_)
                | Error::UndefinedConditional { .. }
                | Error::Singular(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
