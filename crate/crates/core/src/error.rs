use thiserror::Error;

/// Errors raised by the algebra, map and dilation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("algebra mismatch: {left:?} vs {right:?}")]
    AlgebraMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("arity mismatch: expected {expected} arguments, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("amplification level must be at least 1")]
    InvalidLevel,

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("not a unital *-homomorphism: {0}")]
    NotRepresentation(String),

    #[error("representations do not commute (residual {0:.3e})")]
    NonCommuting(f64),

    #[error("Gram kernel is not Hermitian (defect {defect:.3e} > {tol:.3e}); the source map is not symmetric")]
    NonHermitianGram { defect: f64, tol: f64 },

    #[error("map is not dilatable: Gram kernel has eigenvalue {min_eigenvalue:.3e} below -{tol:.3e}, so it is not completely positive")]
    NotCompletelyPositive { min_eigenvalue: f64, tol: f64 },

    #[error("multiplication does not descend to the quotient: factor {factor}, basis element {basis}, residual {residual:.3e}")]
    DescentFailure { factor: usize, basis: usize, residual: f64 },

    #[error("triple is not minimal: spanning rank {rank} < dimension {kappa}")]
    NotMinimal { rank: usize, kappa: usize },

    #[error("dilation spaces differ in dimension ({0} vs {1}); the triples are not unitarily equivalent")]
    DimensionMismatch(usize, usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
