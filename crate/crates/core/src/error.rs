use thiserror::Error;

pub type Result<T, E = EsflError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum EsflError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Server compute is zero for a user that still has server-side work.
    #[error("allocation error: {0}")]
    Allocation(String),

    /// A link with zero rate has to carry a positive number of bytes.
    #[error("infeasible link: {0}")]
    InfeasibleLink(String),

    #[error("user {user} has no feasible cut layer: {reason}")]
    InfeasibleUser { user: usize, reason: String },

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl EsflError {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        EsflError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input documents or arguments, as opposed to
    /// failures while running a well-formed job.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            EsflError::Parse { .. }
                | EsflError::Validation(_)
                | EsflError::Config(_)
                | EsflError::Io { .. }
                | EsflError::TooLarge(_)
        )
    }
}
