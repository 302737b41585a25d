use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("amplitude {index} is not finite")]
    NonFinite { index: usize },

    #[error("{len} amplitudes do not fit below cutoff {cutoff}")]
    TooManyAmplitudes { len: usize, cutoff: usize },

    #[error("squared norm {norm_sqr} exceeds 1")]
    NormExceedsOne { norm_sqr: f64 },

    #[error("state is not normalized (squared norm {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("state has squared norm {norm_sqr}, at or below the zero-state threshold")]
    ZeroState { norm_sqr: f64 },

    #[error("shift by {shift} pushes a nonzero amplitude past cutoff {cutoff}")]
    TruncationOverflow { shift: usize, cutoff: usize },

    #[error("invalid squeezing parameter: {0}")]
    InvalidSqueeze(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("alternating sum lost precision (estimated relative error {estimate:e} at {bits} bits)")]
    PrecisionLoss { estimate: f64, bits: usize },

    #[error("outcome (n={n}, n'={n_prime}) is impossible: probability {probability:e}")]
    ImpossibleOutcome { n: usize, n_prime: usize, probability: f64 },

    #[error("two-mode space of dimension {dim} exceeds the oracle limit {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("zero density {density:e} at quadrature outcome ({x}, {p})")]
    ZeroDensity { x: f64, p: f64, density: f64 },

    #[error(
        "{quantity} not converged: |{value_low} - {value_high}| = {difference:e} at cutoffs \
         {cutoff_low} and {cutoff_high}; rerun with a larger cutoff"
    )]
    NotConverged {
        quantity: String,
        cutoff_low: usize,
        cutoff_high: usize,
        value_low: f64,
        value_high: f64,
        difference: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
