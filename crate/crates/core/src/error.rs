use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum QitError {
    #[error("mode index {mode} out of range for {modes}-mode space")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode function is the zero vector")]
    ZeroModeFunction,

    #[error("operator is not antihermitian (residual {residual:.3e})")]
    NotAntihermitian { residual: f64 },

    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("operator is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("effect '{label}' is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { label: String, min_eigenvalue: f64 },

    #[error("effects do not sum to the identity (residual {residual:.3e})")]
    Incomplete { residual: f64 },

    #[error("invalid density matrix: {reason}")]
    InvalidDensityMatrix { reason: String },

    #[error("keep set is empty or contains a mode out of range")]
    BadKeepSet,

    #[error("tensor factors must share the same occupation cutoff ({left} vs {right})")]
    CutoffMismatch { left: usize, right: usize },

    #[error("Choi matrix is not completely positive (min eigenvalue {min_eigenvalue:.3e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("selective channel outcome has negligible probability ({trace:.3e})")]
    NegligibleOutcome { trace: f64 },

    #[error("Kraus normalization violated (residual {residual:.3e})")]
    BadNormalization { residual: f64 },

    #[error("alpha = {alpha} too large for cutoff {cutoff}: alpha * n_max must not exceed 1")]
    AlphaTooLarge { alpha: f64, cutoff: usize },

    #[error("representation tag mismatch: state on '{state_tag}', expected '{expected_tag}'")]
    RepresentationMismatch {
        state_tag: String,
        expected_tag: String,
    },

    #[error("dual/direct expectation routes disagree (residual {residual:.3e})")]
    DualityMismatch { residual: f64 },

    #[error("algebra element '{name}' is not defined in both representations")]
    UnresolvedElement { name: String },

    #[error(
        "constraint {index} provably infeasible: target {target} outside spectrum [{lo}, {hi}] by more than eps"
    )]
    ProvablyInfeasible {
        index: usize,
        target: f64,
        lo: f64,
        hi: f64,
    },

    #[error("empty collection: {what}")]
    Empty { what: &'static str },

    #[error("duplicate outcome label '{0}'")]
    DuplicateLabel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QitError>;
