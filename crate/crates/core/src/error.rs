use thiserror::Error;

/// Failure while reading expression text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { position, .. } => *position,
            ParseError::UnknownIdentifier { position, .. } => *position,
        }
    }
}

/// Failure while evaluating an expression numerically.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("variable `{0}` has no value")]
    Unbound(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid variable set: {0}")]
    VarSet(String),
    #[error("oracle mismatch in {what}: residual {residual:e}")]
    OracleMismatch { what: String, residual: f64 },
    #[error("symbolic mode needs F polynomial in the velocities: {0}")]
    SymbolicModeUnsupported(String),
    #[error("matrix is not positive definite at sample point {0}")]
    NotPositiveDefinite(usize),
    #[error("operation needs the inverse of the automorphism")]
    MissingInverse,
    #[error("metric is singular")]
    SingularMetric,
    #[error("automorphism check failed: {0}")]
    BadAutomorphism(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
