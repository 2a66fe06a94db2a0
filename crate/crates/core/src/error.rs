use thiserror::Error;

/// Errors raised by the expression core and the operators built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid context: {0}")]
    Context(String),

    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },

    #[error("unknown identifier `{name}` at column {column}")]
    UnknownIdentifier { name: String, column: usize },

    #[error("function `{name}` expects {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("jet order {needed} exceeds the context maximum {max}")]
    OrderOverflow { needed: u32, max: u32 },

    #[error("expression of order {found} exceeds the prolongation order {order}")]
    OrderMismatch { found: u32, order: u32 },

    #[error("undeclared symbol: {0}")]
    UndeclaredSymbol(String),

    #[error("no value bound for `{0}`")]
    MissingBinding(String),

    #[error("domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: String },

    #[error("operation requires a single dependent variable (q = 1), context has {0}")]
    NonScalar(usize),

    #[error("operation requires a single independent variable (p = 1), context has {0}")]
    NotOrdinary(usize),

    #[error("invalid vector field: {0}")]
    VectorField(String),

    #[error("invalid one-form: {0}")]
    OneForm(String),

    #[error("invalid equation: {0}")]
    Equation(String),

    #[error("expression is not a total derivative: E(e) = {0}")]
    NotExact(String),

    #[error("exact expression outside the supported elimination class: {0}")]
    PatternUnsupported(String),

    #[error("cannot read {0}")]
    Io(String),

    #[error("line {line}, column {column}: {message}")]
    Problem {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
