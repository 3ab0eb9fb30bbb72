use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("trajectory contains a non-finite value at node {node}")]
    NonFinite { node: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("endpoint value {value:e} exceeds embedding tolerance {tol:e}")]
    EndpointNotZero { value: f64, tol: f64 },

    #[error("unknown builtin example {0} (expected 1, 2 or 3)")]
    UnknownExample(u32),

    #[error("non-finite sample at t = {t}, q = {q:?}")]
    NonFiniteSample { t: f64, q: Vec<f64> },

    #[error("forcing does not look square integrable: norm still grew by {increment:e} at T = {truncation}")]
    NonIntegrableSuspected { truncation: f64, increment: f64 },

    #[error("no hypothesis report attached to the action context")]
    MissingConstants,

    #[error("scaling diverged: action stayed nonnegative after {doublings} doublings of zeta")]
    ScalingDiverged { doublings: usize },

    #[error("problem is not admissible: {}", .0.join("; "))]
    NotAdmissible(Vec<String>),

    #[error("path collapsed: maximal action {max_action:e} is below alpha/2 = {threshold:e}")]
    CollapsedPath { max_action: f64, threshold: f64 },

    #[error("singular Jacobian at Newton iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("Newton diverged at iteration {iteration}: residual grew for 5 consecutive steps")]
    Diverged { iteration: usize },

    #[error("window half-width {window} exceeds half-period {half_period}")]
    WindowTooLarge { window: f64, half_period: f64 },

    #[error("ladder aborted at k = {k}: two consecutive solves failed")]
    LadderAborted { k: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("spec file error: {0}")]
    SpecFile(String),

    #[error("malformed trajectory data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
