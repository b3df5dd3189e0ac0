use thiserror::Error;

/// Errors produced by grid construction, solvers and the reconstruction
/// pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid configuration: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown nonlinearity family '{0}'")]
    UnknownFamily(String),

    #[error("perturbation norm {norm} exceeds the admissible radius {epsilon}")]
    PerturbationTooLarge { norm: f64, epsilon: f64 },

    #[error("Newton iteration diverged at time level {level} (residual {residual})")]
    NewtonDivergence { level: usize, residual: f64 },

    #[error("solution blow-up detected at time level {level} (sup norm {sup_norm})")]
    BlowUp { level: usize, sup_norm: f64 },

    #[error("singular step matrix at time level {level}")]
    SingularStepMatrix { level: usize },

    #[error("solver failed at lambda={lambda}: {source}")]
    AtLambda {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("target value {s} is outside the sampled range [{lo}, {hi}] at this node")]
    OutOfRange { s: f64, lo: f64, hi: f64 },

    #[error("non-monotone sample table at node {node} (time level {level})")]
    NonMonotoneTable { node: usize, level: usize },

    #[error("empty valid box: half-width {half_width} below resolvable spacing")]
    EmptyValidBox { half_width: f64 },

    #[error("hypothesis check failed: {0}")]
    HypothesisFailed(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Tag a solver error with the lambda value it occurred at.
    pub fn at_lambda(self, lambda: f64) -> Error {
        Error::AtLambda {
            lambda,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
