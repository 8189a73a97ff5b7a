use thiserror::Error;

/// Errors raised by the solvers, simulators and model constructors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate diffusion: effective volatility is zero")]
    DegenerateDiffusion,

    #[error("accuracy not reached: achieved error {achieved:e} exceeds tolerance {tolerance:e}")]
    Accuracy { achieved: f64, tolerance: f64 },

    #[error("curvature {value:e} at x = {x} is below the floor {floor:e}")]
    DegenerateCurvature { x: f64, value: f64, floor: f64 },

    #[error("no sign change of the smooth-pasting residual up to x = {reached}")]
    NoRoot { reached: f64 },

    #[error(
        "asymmetric intervention costs (K+ = {k_plus}, K- = {k_minus}) have no closed form; \
         use the finite-difference solver"
    )]
    AsymmetricCost { k_plus: f64, k_minus: f64 },

    #[error("invalid band half-width {0}")]
    InvalidBand(f64),

    #[error("policy iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("no active gradient nodes: free boundary not found")]
    BoundaryNotFound,

    #[error("singular linear system (zero pivot at row {0})")]
    SingularSystem(usize),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("product {index}: {source}")]
    Product { index: usize, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
