use thiserror::Error;

/// Errors raised by model construction, queries and solvers.
///
/// Verification checks never return these for a failing property; failures
/// are carried in verdicts. An `Error` means the question itself was malformed.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state is not normalized (squared norm {norm_sq})")]
    NotNormalized { norm_sq: f64 },
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("vectors are not orthonormal (defect {defect:e})")]
    NotOrthonormal { defect: f64 },
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("too many vectors for dimension {dim}: {count}")]
    TooManyVectors { dim: usize, count: usize },
    #[error("invalid effect: {0}")]
    InvalidEffect(String),
    #[error("invalid context `{label}`: {reason}")]
    InvalidContext { label: String, reason: String },
    #[error("invalid POVM `{label}`: {reason}")]
    InvalidPovm { label: String, reason: String },
    #[error("no epistemic state for the requested state under preparation `{prep}`")]
    MissingEpistemic { prep: String },
    #[error("no response row for effect {effect} in `{context}`")]
    MissingResponse { context: String, effect: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid zoo spec: {0}")]
    InvalidSpec(String),
    #[error("state is not a ray of context `{0}`")]
    StateNotInContext(String),
    #[error("basis states do not match context `{0}`")]
    BasisMismatch(String),
    #[error("shared effect missing from context `{0}`")]
    SharedEffectMissing(String),
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("unknown measurement `{0}`")]
    UnknownMeasurement(String),
    #[error("malformed ray set: {0}")]
    MalformedRaySet(String),
    #[error("joint search over both epistemic states and responses is bilinear and not supported")]
    Bilinear,
    #[error("inconsistent targets: {0}")]
    InconsistentTargets(String),
    #[error("malformed feasibility problem: {0}")]
    MalformedProblem(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
