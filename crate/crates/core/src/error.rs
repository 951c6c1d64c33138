use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates a domain invariant.
    #[error("{key} must be {constraint} (got {value})")]
    Invalid {
        key: &'static str,
        constraint: &'static str,
        value: f64,
    },

    #[error("small-motion bound violated: epsilon * max(a_left, a_right) = {product} must be < {bound}")]
    SmallMotion { product: f64, bound: f64 },

    #[error("mode index must be >= 1 (got {0})")]
    ModeIndex(usize),

    #[error("k_max = {k_max} cannot represent the resonant partner modes (needs >= {required})")]
    Truncation { k_max: usize, required: usize },

    #[error("interference visibility is undefined: {0}")]
    Visibility(String),

    #[error(
        "integration did not reach rel_tolerance {tolerance:e}: estimated error {achieved:e} after {steps} steps (step {step:e})"
    )]
    Integration {
        tolerance: f64,
        achieved: f64,
        steps: usize,
        step: f64,
    },

    #[error("scan: {0}")]
    Scan(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
