use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (deviation {deviation:.3e}, allowed {allowed:.3e})")]
    NotHermitian { deviation: f64, allowed: f64 },

    #[error("Jacobi iteration did not converge (residual {residual:.3e} after {sweeps} sweeps)")]
    NoConvergence { residual: f64, sweeps: usize },

    #[error("matrix is not positive semidefinite (eigenvalue {min_eigenvalue:.6e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("signature mismatch: {left:?} vs {right:?}")]
    SignatureMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("kernel is not positive definite (eigenvalue {min_eigenvalue:.6e} in block {block})")]
    NotPositiveDefinite { min_eigenvalue: f64, block: usize },

    #[error("rank mismatch: {left:?} vs {right:?}")]
    RankMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("intertwiner is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("map is not completely positive (eigenvalue {min_eigenvalue:.6e} in block {block})")]
    NotCompletelyPositive { min_eigenvalue: f64, block: usize },

    #[error("residual {residual:.3e} exceeds tolerance {allowed:.3e} in {clause}")]
    ResidualExceeded { clause: String, residual: f64, allowed: f64 },

    #[error("effect {index} is not positive (eigenvalue {min_eigenvalue:.6e})")]
    NotPositiveEffect { index: usize, min_eigenvalue: f64 },

    #[error("unknown atom `{0}`")]
    UnknownAtom(String),

    #[error("dominating measure vanishes on atom `{atom}` where the measure does not")]
    NotDominating { atom: String },

    #[error("measure is not positive on atom `{atom}` (eigenvalue {min_eigenvalue:.6e})")]
    NotPositive { atom: String, min_eigenvalue: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
