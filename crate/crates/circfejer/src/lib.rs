//! Nonparametric density and distribution-function estimation on the circle
//! with Fejer (triangular-taper) trigonometric polynomial kernels.
//!
//! The crate provides:
//!
//! - [`kernelmath`]: the Fejer kernel, its antiderivative, exact and quadrature
//!   kernel moments, harmonic sums, and the Lambert W function used by the
//!   CDF bandwidth rule;
//! - [`estimators`]: circular samples, empirical trigonometric moments, and
//!   the density and CDF estimators;
//! - [`bandwidth`]: plug-in selection of the polynomial degree for density,
//!   CDF, and classical-deconvolution targets;
//! - [`origin`]: data-driven selection of the CDF origin by minimizing the
//!   variance-criterion over inter-observation gaps;
//! - [`deconv`]: Berkson and classical measurement-error corrections;
//! - [`simdist`]: circular models (von Mises, wrapped normal, wrapped Cauchy,
//!   uniform, mixtures), exact functionals, samplers, and ISE utilities;
//! - [`harness`]: the replication harness that rebuilds the reference
//!   simulation tables deterministically.

pub mod bandwidth;
pub mod deconv;
mod error;
pub mod estimators;
pub mod harness;
pub mod kernelmath;
pub mod origin;
pub mod simdist;
mod special;

pub use error::{Error, Result};
