use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("{0}")]
    Invalid(String),

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("function `{function}` takes {expected} argument(s), got {found}")]
    Arity {
        function: String,
        expected: usize,
        found: usize,
    },

    #[error("domain error in `{expr}`: {message}")]
    Domain { expr: String, message: String },

    #[error("state tag `{tag}` is not in the boundary alphabet of `{action}`")]
    UnknownTag { tag: String, action: String },

    #[error("point is not classified by the quasi-orbit table of `{0}`")]
    Uncataloged(String),

    #[error("quasi-orbit `{0}` is of the second kind; it has no asymptotic decomposition")]
    SecondKind(String),

    #[error("symbol sample {value} exceeds its declared bound {bound}")]
    Unbounded { value: f64, bound: f64 },

    #[error("hbar must be in (0,1], got {0}")]
    HbarRange(f64),

    #[error("grid mismatch between sampled symbols")]
    GridMismatch,

    #[error("matrix is not Hermitian (defect {0:e})")]
    NonHermitian(f64),

    #[error("eigen-solver residual {residual:e} exceeds {bound:e}")]
    SolverResidual { residual: f64, bound: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Failures of the numerics themselves, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SolverResidual { .. } | Error::NonHermitian(_) | Error::Unbounded { .. }
        )
    }

    pub(crate) fn validation(field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
