use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("kernel evaluated at its singular point r = 0")]
    SingularPoint,

    #[error("horizon {delta} is too large for a periodic domain of length {period}")]
    HorizonTooLarge { delta: f64, period: f64 },

    #[error("operator is not invertible (smallest eigenvalue estimate {lambda_min:e})")]
    NotInvertible { lambda_min: f64 },

    #[error("stage-1 kernel is degenerate: smallest eigenvalue {lambda_min:e} is not positive")]
    DegenerateKernel { lambda_min: f64 },

    #[error("problem is not solvable: {0}")]
    Solvability(String),

    #[error("optimizer diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("malformed dataset: {0}")]
    Format(String),

    #[error("checksum mismatch for {}", path.display())]
    Checksum { path: PathBuf },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotInvertible { .. }
                | Error::DegenerateKernel { .. }
                | Error::Divergence { .. }
                | Error::Solvability(_)
        )
    }
}
