use thiserror::Error;

/// Errors surfaced by the planning and learning routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An input table violates a structural invariant (shape, row sums, ranges).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A scenario ambiguity set with no member kernels.
    #[error("empty scenario set at state {state}, action {action}")]
    EmptySet { state: usize, action: usize },

    /// The brute-force support oracle is restricted to tiny state spaces.
    #[error("brute-force support oracle limited to {max} states, got {got}")]
    TooLarge { max: usize, got: usize },

    /// KL divergence or KL mirror step evaluated outside its domain.
    #[error("KL domain error: {0}")]
    Domain(String),

    /// The induced Markov chain has more than one closed communicating class.
    #[error("chain under the given policy is not irreducible: {0} closed classes")]
    NotIrreducible(usize),

    /// Fixed-point iteration exceeded its certified iteration cap.
    #[error("fixed-point iteration failed to converge within {0} iterations")]
    NonConvergence(usize),

    /// Online evaluation requires a positive policy and an ergodic nominal chain.
    #[error("exploration assumption violated: {0}")]
    AssumptionViolated(String),

    /// Contamination-mode stochastic operator applied to a non-contamination spec.
    #[error("operator mode mismatch: {0}")]
    ModeMismatch(String),

    /// The initial distribution must have full support for mismatch constants.
    #[error("initial distribution has a zero entry at state {0}")]
    NoFullSupport(usize),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
