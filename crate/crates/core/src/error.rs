use thiserror::Error;

/// Errors raised by the dynamics toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is singular (|det| = {det:e})")]
    SingularMatrix { det: f64 },

    #[error("{what} did not converge within {iterations} iterations")]
    ConvergenceFailure { what: &'static str, iterations: usize },

    #[error("eigenvalue modulus {modulus} lies within the unit-modulus tolerance band")]
    NearUnitModulusAmbiguity { modulus: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("homeomorphism condition violated: ||T^-1 a|| = {inverse_offset_norm}")]
    HomeoConditionViolated { inverse_offset_norm: f64 },

    #[error("degenerate image: ||a + Tx|| = {norm:e}")]
    DegenerateImage { norm: f64 },

    #[error("system is not certified invertible")]
    NotInvertible,

    #[error("point is not on the unit sphere (norm {norm})")]
    NotUnitVector { norm: f64 },

    #[error("offset norm {alpha} outside (0, 1)")]
    InvalidAlpha { alpha: f64 },

    #[error("operation requires a {expected}-dimensional system")]
    UnsupportedDimension { expected: usize, got: usize },

    #[error("no fixed points: cos(theta) is not above sqrt(1 - alpha^2)")]
    NoFixedPoints,

    #[error("map is periodic of order {period}: every point is periodic")]
    IdenticallyPeriodic { period: u32 },

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("T a != a (residual {residual:e}); divide T by its dominant eigenvalue first")]
    NormalizationRequired { residual: f64 },

    #[error("no invariant 2-plane contains the offset")]
    PlaneNotFound,

    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    #[error("no witness found: {0}")]
    WitnessNotFound(String),

    #[error("product must contain at least one factor")]
    EmptyProduct,

    #[error("malformed witness: {0}")]
    MalformedWitness(String),

    #[error("witness kind {0} cannot be lifted to a product")]
    UnliftableWitness(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
