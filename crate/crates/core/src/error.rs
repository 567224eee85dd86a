//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong inside the library.
///
/// [`Error::is_numerical`] separates numerical breakdowns (non-convergent
/// quadrature, stiff integration) from input validation failures; the CLI
/// maps the two groups to different exit codes.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid coordinates: {0}")]
    InvalidCoordinates(String),

    #[error("invalid simplex point: {0}")]
    InvalidSimplex(String),

    #[error("invalid scale {0}: scales must be positive and finite")]
    InvalidScale(f64),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e} after {subdivisions} panels")]
    NonConvergent {
        estimate: f64,
        error_bound: f64,
        subdivisions: usize,
    },

    #[error("entry ({row}, {col}): {source}")]
    Entry {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate matching point {l:.6} for gap {d}: weights too asymmetric for this scale")]
    DegenerateMatching { l: f64, d: f64 },

    #[error("matching condition violated at gap {index}: reduced gap {found} differs from {expected}")]
    MatchingViolation {
        index: usize,
        expected: f64,
        found: f64,
    },

    #[error("energy evaluation failed: {0}")]
    EvaluationError(String),

    #[error("step size halved {halvings} times at t = {t} without restoring positivity")]
    StiffnessError {
        t: f64,
        halvings: usize,
        state: Vec<f64>,
    },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown {kind} '{name}' (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonConvergent { .. }
            | Error::StiffnessError { .. }
            | Error::DegenerateMatching { .. } => true,
            Error::Entry { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn at(self, row: usize, col: usize) -> Error {
        Error::Entry {
            row,
            col,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
