use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("boundary constraint violated: alpha+beta = {at_zero:.3e} at x=0 and {at_pi:.3e} at x=pi")]
    BoundaryConstraintViolated { at_zero: f64, at_pi: f64 },
    #[error("coefficient quadrature produced a non-positive or non-finite value at sample {index}")]
    NonPositiveCoefficient { index: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("interpolation failed: {0}")]
    Interpolation(String),
    #[error("mass density is not positive at sample {index}")]
    SingularMass { index: usize },
    #[error("requested {requested} eigenpairs but the grid supports at most {limit}")]
    ResolutionExceeded { requested: usize, limit: usize },
    #[error("eigensolver failure: {0}")]
    EigenSolverFailure(String),
    #[error("generator too rough for third derivatives (max third difference / max |alpha| = {ratio:.3e})")]
    InsufficientSmoothness { ratio: f64 },
    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("nonlinearity returned a non-finite value")]
    NonFiniteEvaluation,
    #[error("Newton iteration diverged after {iterations} steps (residual {residual:.3e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("linearized bifurcation operator is degenerate (margin {margin:.3e})")]
    DegenerateLinearization { margin: f64 },
    #[error("linearized operator is singular")]
    SingularOperator,
    #[error("Neumann series diverged after {terms} terms")]
    NeumannDiverged { terms: usize },
    #[error("fixed-point iteration at stage {stage} failed to contract (ratio {ratio:.3e})")]
    ContractionFailed { stage: usize, ratio: f64 },
    #[error("parameters not certified at stage {stage}: {detail}")]
    UncertifiedParameters { stage: usize, detail: String },
    #[error("spectrum covers mu up to {available:.6e} but the window needs {needed:.6e}")]
    WindowUnderflow { needed: f64, available: f64 },
    #[error("iterate left the unit ball: |w|_(s+sigma) = {norm:.3e} at stage {stage}")]
    SmallnessViolated { stage: usize, norm: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors caused by the mathematics of the requested run rather than by malformed input.
    pub fn is_domain_error(&self) -> bool {
        !matches!(
            self,
            Error::InvalidParameter(_) | Error::Config(_) | Error::Io(_) | Error::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
