//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by estimation, bandwidth selection, and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A Fejer order of zero was requested; the kernel is defined for m >= 1.
    #[error("Fejer order must be at least 1")]
    InvalidOrder,
    /// A sample was empty where at least one observation is required.
    #[error("sample must contain at least one angle")]
    EmptySample,
    /// An angle was NaN or infinite.
    #[error("angle at index {index} is not finite")]
    NonFiniteAngle { index: usize },
    /// Angle and weight vectors disagree in length.
    #[error("angles and weights must have equal length ({angles} angles, {weights} weights)")]
    LengthMismatch { angles: usize, weights: usize },
    /// Weights must be finite, nonnegative, and sum to a positive total.
    #[error("weights must be finite and nonnegative with a positive sum")]
    InvalidWeights,
    /// An operation needed more observations than the sample provides.
    #[error("operation requires at least {required} observations, got {got}")]
    TooFewObservations { required: usize, got: usize },
    /// The unbiased squared-coefficient estimator is defined for unweighted samples only.
    #[error("unbiased squared-coefficient estimates require an unweighted sample")]
    WeightedUnbiased,
    /// An evaluation grid was empty.
    #[error("evaluation grid must not be empty")]
    EmptyGrid,
    /// A grid that must be uniformly spaced is not.
    #[error("grid must be uniformly spaced over one period")]
    NonUniformGrid,
    /// Quadrature was requested with fewer points than the kernel order supports.
    #[error("quadrature for order {m} needs at least {required} points per period, got {got}")]
    InsufficientResolution { m: u32, required: usize, got: usize },
    /// The harmonic-sum exponent is outside the supported range 1..=4.
    #[error("harmonic-sum exponent must be between 1 and 4, got {0}")]
    InvalidExponent(u32),
    /// Harmonic sums need at least one term.
    #[error("harmonic sums require an upper limit of at least 1")]
    EmptyHarmonicRange,
    /// The principal Lambert W branch is real only for arguments >= -1/e.
    #[error("Lambert W principal branch is undefined for {z} < -1/e")]
    LambertDomain { z: f64 },
    /// A sample was too concentrated for a parametric fit.
    #[error("sample is degenerate: mean resultant length {r_bar} is too close to 1")]
    DegenerateSample { r_bar: f64 },
    /// A distribution or error-model parameter was outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    /// Classical deconvolution divides by an error coefficient that is numerically zero.
    #[error(
        "error-model coefficient at frequency {index} is below 1e-10 in magnitude; \
         classical deconvolution is infeasible at order {m}"
    )]
    VanishingCoefficient { index: u32, m: u32 },
    /// The requested bandwidth rule is not defined for the requested target.
    #[error("bandwidth rule is not supported for this target: {0}")]
    UnsupportedRule(&'static str),
    /// A replication harness configuration was invalid.
    #[error("invalid experiment configuration: {0}")]
    InvalidExperiment(&'static str),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
