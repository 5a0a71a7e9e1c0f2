/// Error type shared by every module in the crate.
#[derive(Debug, thiserror::Error)]
pub enum CoreError {
    /// A parameter violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// A site or cell index lies outside the valid range.
    #[error("index out of range: {0}")]
    OutOfRange(String),

    /// Sampled functions were combined on incompatible grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A matrix could not be assigned a conjugacy class at the requested
    /// tolerance (trace inside the tolerance band without ±I or parabolic
    /// structure, or a complex trace where a real one is expected).
    #[error("indeterminate classification: {0}")]
    Indeterminate(String),

    /// A numerical safety guard tripped (near-singular shift, overflow,
    /// non-real output where a real quantity is required, ...).
    #[error("numerical guard tripped: {0}")]
    NumericalGuard(String),

    /// The evolved state reached the truncation edge of the finite lattice:
    /// moment values would no longer represent the half-line operator.
    #[error(
        "boundary contamination: tail mass {tail_mass:.3e} beyond the safety \
         zone at t = {t:.3} exceeds the limit {limit:.1e}"
    )]
    BoundaryContamination { tail_mass: f64, t: f64, limit: f64 },

    /// The iterative eigensolver exceeded its sweep budget.
    #[error("eigensolver failed to converge: {0}")]
    EigenConvergence(String),

    /// Underlying I/O failure while loading potential or state files.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A text input (potential file, state file) could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
