use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Gamma function pole at z = {0}")]
    GammaPole(f64),

    #[error("{func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("no valid Mellin-Barnes contour: {0}")]
    Contour(String),

    #[error("quadrature tolerance {tol:e} not met (estimate {estimate:e})")]
    ToleranceNotMet { tol: f64, estimate: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid configuration `{field}`: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("asymptotic series diverges: {0}")]
    NonConvergent(String),

    #[error("degenerate asymptotic branch: {0}")]
    DegenerateAsymptote(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
