use thiserror::Error;

/// Errors produced anywhere in the compilation pipeline.
///
/// The CLI maps these onto distinct exit codes, so variants are grouped by
/// failure class rather than by module.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (problem file, device file, flags).
    #[error("invalid input: {0}")]
    Input(String),

    /// Vector/matrix shape disagreement in GF(2) algebra.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A qubit or node id that does not exist in the current context.
    #[error("unknown id: {0}")]
    UnknownId(usize),

    /// No feasible placement exists (polynomial-constraint groups cannot be
    /// laid out adjacently, or the device is too small).
    #[error("infeasible placement: {0}")]
    Infeasible(String),

    /// A local-search move that would violate an invariant; the move is
    /// rejected, not the whole search.
    #[error("move rejected: {0}")]
    MoveRejected(String),

    /// Oracle verification failed (circuit does not implement its target).
    #[error("verification failed: {0}")]
    Verification(String),

    /// Request exceeds a hard resource cap (e.g. statevector qubit limit).
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
