use thiserror::Error;

pub type Result<T, E = DpgError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DpgError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("index out of range: {what} {index} (len {len})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("unsupported polynomial degree {degree} for {what}")]
    UnsupportedDegree { what: &'static str, degree: usize },
    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),
    #[error("degenerate element {element}: signed area {area:e}")]
    DegenerateElement { element: usize, area: f64 },
    #[error("Gram matrix of element {element} is not positive definite")]
    GramNotPositive { element: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("CG did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("CG detected non-positive curvature {curvature:e} at iteration {iteration}")]
    NegativeCurvature { iteration: usize, curvature: f64 },
    #[error("matrix singular to working precision at pivot {pivot} (|pivot| = {value:e})")]
    Singular { pivot: usize, value: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown case id `{0}`")]
    UnknownCase(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<DpgError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl DpgError {
    /// Wraps the error with a short description of the failing stage.
    pub fn context(self, context: impl Into<String>) -> Self {
        DpgError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for failures of a linear solver (possibly wrapped in context).
    pub fn is_solver_failure(&self) -> bool {
        match self {
            DpgError::NotConverged { .. }
            | DpgError::NegativeCurvature { .. }
            | DpgError::Singular { .. }
            | DpgError::GramNotPositive { .. } => true,
            DpgError::Context { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}
