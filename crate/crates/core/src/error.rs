use thiserror::Error;

/// Errors raised across the laboratory.
///
/// Validation problems (bad parameters, violated hypotheses) are kept apart
/// from numerical failures so the CLI can map them to distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: fields live on different grids")]
    GridMismatch,

    #[error("support overflow: {0} would alias past the grid extent")]
    SupportOverflow(String),

    #[error("invalid data family: {0}")]
    InvalidFamily(String),

    #[error("unknown equation `{0}`")]
    UnknownEquation(String),

    #[error("invalid equation parameter: {0}")]
    InvalidEquation(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time quadrature not converged: K={k} vs K={k_fine} differ by {discrepancy:.3e} (tolerance {tolerance:.1e})")]
    QuadratureNotConverged {
        k: usize,
        k_fine: usize,
        discrepancy: f64,
        tolerance: f64,
    },

    #[error("outside convergence regime: {0}")]
    OutsideConvergence(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("solver instability: {0}")]
    Instability(String),

    #[error("empty constraint set: {0}")]
    EmptyConstraint(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl LabError {
    /// True for errors caused by user input rather than by a numerical check.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            LabError::InvalidGrid(_)
                | LabError::InvalidFamily(_)
                | LabError::UnknownEquation(_)
                | LabError::InvalidEquation(_)
                | LabError::Hypothesis(_)
                | LabError::InvalidArgument(_)
                | LabError::Config(_)
        )
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
