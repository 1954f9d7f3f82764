use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("PT symmetry is broken (gamma = {gamma} > sqrt(2) k = {critical})")]
    BrokenPhase { gamma: f64, critical: f64 },

    #[error("family does not exist at this b: {0}")]
    FamilyDoesNotExist(String),

    #[error("formula is singular: {0}")]
    Singular(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("degenerate point: Jacobian is singular beyond the gauge direction (sigma_min = {sigma_min:e})")]
    DegeneratePoint { sigma_min: f64 },

    #[error("eigenvalue iteration did not converge for an {n}x{n} matrix")]
    EigenNoConvergence { n: usize },

    #[error("root finder failed: {0}")]
    RootFinder(String),

    #[error("spurious root: reduced ghost algebra solved but full residual is {residual:e}")]
    SpuriousRoot { residual: f64 },

    #[error("continuation step underflow at parameter {param}")]
    StepUnderflow { param: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
