use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("direction is not a unit vector (norm {0})")]
    NonUnitVector(f64),

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("system matrix is not positive definite (block {block})")]
    Indefinite { block: usize },

    #[error("local update did not converge after {iterations} iterations (residual {residual:e})")]
    LocalNonConvergence { iterations: usize, residual: f64 },

    #[error("Newton solver did not converge; residual history {history:?}")]
    NewtonNonConvergence { history: Vec<f64> },

    #[error("load control did not converge at t = {time} (residual {residual:e})")]
    ControlNonConvergence { time: f64, residual: f64 },

    #[error("conjugate gradients stagnated after {iterations} iterations (residual {residual:e})")]
    CgStagnation { iterations: usize, residual: f64 },

    #[error("loss is not finite at epoch {0}")]
    NonFiniteLoss(usize),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NewtonNonConvergence { .. }
            | Error::LocalNonConvergence { .. }
            | Error::ControlNonConvergence { .. }
            | Error::CgStagnation { .. }
            | Error::NonFiniteLoss(_)
            | Error::Indefinite { .. } => 2,
            Error::Io(_) | Error::Json(_) | Error::Schema(_) => 3,
            _ => 1,
        }
    }

    pub fn is_convergence_failure(&self) -> bool {
        self.exit_code() == 2
    }
}
