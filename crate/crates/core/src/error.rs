use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e} exceeds {allowed:.3e})")]
    NonHermitian { asymmetry: f64, allowed: f64 },

    #[error("matrix contains NaN or infinite entries")]
    NonFinite,

    #[error("subspaces live in different ambient spaces ({left} vs {right})")]
    AmbientMismatch { left: usize, right: usize },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),

    #[error("spectral ordering hypothesis violated (sup spec A0 ≤ λ ≤ inf spec A1 fails): {0}")]
    HypothesisViolated(String),

    #[error("dimension mismatch: expected {expected}, computed {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("subspace is not the graph of an operator on H0 (cond(Z0) = {cond:.3e})")]
    NotAGraph { cond: f64 },

    #[error("inconsistent generator spec: {0}")]
    InconsistentSpec(String),

    #[error("no kernel coupling: Ker(A0-lambda)∩Ker V* or Ker(A1-lambda)∩Ker V is trivial")]
    NoKernelCoupling,

    #[error("inconsistent uniqueness verdict: {0}")]
    InconsistentVerdict(String),

    #[error("assertion failed: {clause} (defect {defect:.3e}, allowed {allowed:.3e})")]
    AssertionFailure {
        clause: String,
        defect: f64,
        allowed: f64,
    },

    #[error("negative input: {0}")]
    NegativeInput(String),

    #[error("malformed instance: {0}")]
    Malformed(String),

    #[error("{0} did not converge")]
    NoConvergence(&'static str),
}

impl Error {
    /// True for errors that mean the input violates the block-operator
    /// hypothesis rather than a numerical check failing.
    pub fn is_hypothesis_violation(&self) -> bool {
        matches!(self, Error::HypothesisViolated(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
