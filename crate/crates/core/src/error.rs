use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operator is not Hermitian (max |A − A†| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no root found; {diagnostics}")]
    NoRoot { diagnostics: String },

    #[error("optimizer did not converge after {iterations} iterations (best J = {best_objective}, |∇J| = {gradient_norm:e})")]
    NonConvergence { iterations: usize, best_objective: f64, gradient_norm: f64 },

    #[error("shooting diverged at homotopy stage {stage} (best residual {residual:e})")]
    ShootingDivergence { residual: f64, stage: String },

    #[error("rank-deficient system: {0}")]
    RankDeficient(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
