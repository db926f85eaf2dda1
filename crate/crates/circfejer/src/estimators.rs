//! Circular samples, empirical trigonometric moments, and the Fejer-kernel
//! density and distribution-function estimators.
//!
//! Both estimators are evaluated in their Fourier form, which costs
//! `O((n + G) m)` for a sample of size `n`, grid of size `G`, and order `m`:
//!
//! ```text
//! f-hat(t) = 1/(2 pi) + (1/pi) sum_k (1 - k/(m+1)) (a-hat_k cos(k t) + b-hat_k sin(k t))
//! F-hat(t) = [w(t) - w(t0)],  w(y) = (y + pi - mean(X))/(2 pi)
//!            + (1/pi) sum_k (1 - k/(m+1)) (a-hat_k sin(k y) - b-hat_k cos(k y)) / k
//! ```
//!
//! with `t` lifted onto the arc `[t0, t0 + 2 pi]` for the CDF. The direct
//! kernel-sum forms ([`density_estimate_direct`], [`cdf_estimate_direct`])
//! are kept as `O(n G m)` reference implementations for testing.

use crate::error::{Error, Result};
use crate::kernelmath::{self, fejer_kernel, integrated_kernel_lifted, FejerOrder, TWO_PI};
use std::f64::consts::PI;

/// Reduce an angle to the half-open interval `[-pi, pi)`; exact odd multiples
/// of `pi` (and ties from reduction) map to `-pi`.
pub fn reduce_angle(theta: f64) -> f64 {
    kernelmath::reduce_angle(theta)
}

/// A validated sample of angles, optionally weighted (grouped data).
///
/// Angles are reduced to `[-pi, pi)` on construction. Weights must be finite
/// and nonnegative with a positive sum; an unweighted sample behaves as if
/// every weight were one.
#[derive(Debug, Clone)]
pub struct AngleSample {
    angles: Vec<f64>,
    weights: Option<Vec<f64>>,
    total_weight: f64,
}

impl AngleSample {
    /// An unweighted sample; rejects empty input and non-finite angles.
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        Self::build(angles, None)
    }

    /// A weighted sample (for grouped observations such as binned counts).
    pub fn with_weights(angles: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::build(angles, Some(weights))
    }

    fn build(mut angles: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::EmptySample);
        }
        for (index, a) in angles.iter_mut().enumerate() {
            if !a.is_finite() {
                return Err(Error::NonFiniteAngle { index });
            }
            *a = reduce_angle(*a);
        }
        let total_weight = match &weights {
            None => angles.len() as f64,
            Some(w) => {
                if w.len() != angles.len() {
                    return Err(Error::LengthMismatch {
                        angles: angles.len(),
                        weights: w.len(),
                    });
                }
                if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::InvalidWeights);
                }
                let total: f64 = w.iter().sum();
                if total <= 0.0 {
                    return Err(Error::InvalidWeights);
                }
                total
            }
        };
        Ok(Self {
            angles,
            weights,
            total_weight,
        })
    }

    /// The reduced angles.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// The weights, if the sample is weighted.
    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Weight of observation `i` (one for unweighted samples).
    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    /// Number of observations (rows, not total weight).
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    /// Always false after construction; kept for idiomatic completeness.
    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Sum of weights (the sample size for unweighted samples).
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Whether explicit weights were supplied.
    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    /// Weighted mean of the reduced angles (not the circular mean; used by
    /// the CDF estimator's linear term).
    fn weighted_linear_mean(&self) -> f64 {
        let acc: f64 = match &self.weights {
            None => self.angles.iter().sum(),
            Some(w) => self.angles.iter().zip(w).map(|(a, wi)| a * wi).sum(),
        };
        acc / self.total_weight
    }
}

/// Empirical trigonometric moments of a sample up to a given frequency.
///
/// `a_hat[k-1]` and `b_hat[k-1]` estimate the cosine and sine coefficients
/// `E[cos(k X)]` and `E[sin(k X)]`. When requested on an unweighted sample,
/// `c_hat[k-1]` is the unbiased estimator of `a_k^2 + b_k^2`, the mean of
/// `cos(k (X_i - X_j))` over distinct pairs, computed in its algebraically
/// identical `O(n)` form `(n^2 (a-hat^2 + b-hat^2) - n) / (n (n-1))`.
#[derive(Debug, Clone)]
pub struct TrigMoments {
    /// Largest frequency estimated.
    pub order: u32,
    /// Cosine moments for frequencies `1..=order`.
    pub a_hat: Vec<f64>,
    /// Sine moments for frequencies `1..=order`.
    pub b_hat: Vec<f64>,
    /// Unbiased squared-modulus estimates, when requested.
    pub c_hat: Option<Vec<f64>>,
}

/// Compute trigonometric moments up to `order`.
///
/// `with_unbiased` additionally fills `c_hat`; this requires an unweighted
/// sample with at least two observations.
pub fn trig_moments(sample: &AngleSample, order: u32, with_unbiased: bool) -> Result<TrigMoments> {
    if order == 0 {
        return Err(Error::InvalidParameter("moment order must be at least 1"));
    }
    if with_unbiased {
        if sample.is_weighted() {
            return Err(Error::WeightedUnbiased);
        }
        if sample.len() < 2 {
            return Err(Error::TooFewObservations {
                required: 2,
                got: sample.len(),
            });
        }
    }
    let ord = order as usize;
    let mut a_acc = vec![0.0f64; ord];
    let mut b_acc = vec![0.0f64; ord];
    for (i, &x) in sample.angles().iter().enumerate() {
        let w = sample.weight(i);
        let (s1, c1) = x.sin_cos();
        let (mut sk, mut ck) = (s1, c1);
        for k in 0..ord {
            a_acc[k] += w * ck;
            b_acc[k] += w * sk;
            let next_s = sk * c1 + ck * s1;
            let next_c = ck * c1 - sk * s1;
            sk = next_s;
            ck = next_c;
        }
    }
    let total = sample.total_weight();
    for k in 0..ord {
        a_acc[k] /= total;
        b_acc[k] /= total;
    }
    let c_hat = if with_unbiased {
        let n = sample.len() as f64;
        Some(
            a_acc
                .iter()
                .zip(&b_acc)
                .map(|(a, b)| (n * n * (a * a + b * b) - n) / (n * (n - 1.0)))
                .collect(),
        )
    } else {
        None
    };
    Ok(TrigMoments {
        order,
        a_hat: a_acc,
        b_hat: b_acc,
        c_hat,
    })
}

/// What an [`EstimateGrid`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    /// A density estimate over the circle.
    Density,
    /// A CDF estimate over one period starting at `origin`.
    Cdf,
}

/// An estimate evaluated on a grid of angles.
#[derive(Debug, Clone)]
pub struct EstimateGrid {
    /// Evaluation angles, as supplied by the caller.
    pub theta: Vec<f64>,
    /// Estimate values, aligned with `theta`.
    pub values: Vec<f64>,
    /// Density or CDF.
    pub kind: EstimateKind,
    /// Kernel order used.
    pub m: u32,
    /// CDF origin, for `kind == Cdf`.
    pub origin: Option<f64>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(index) = grid.iter().position(|t| !t.is_finite()) {
        return Err(Error::NonFiniteAngle { index });
    }
    Ok(())
}

/// Fejer-kernel density estimate on a grid (Fourier form).
///
/// Values are nonnegative (the kernel is nonnegative; rounding noise is
/// clamped at zero) and integrate to one over the circle.
pub fn density_estimate(sample: &AngleSample, m: FejerOrder, grid: &[f64]) -> Result<EstimateGrid> {
    check_grid(grid)?;
    let moments = trig_moments(sample, m.get(), false)?;
    Ok(density_from_moments(&moments, m, grid))
}

/// Density evaluation shared with the deconvolution estimators: coefficients
/// `coef_a[k-1], coef_b[k-1]` multiply `cos(k t), sin(k t)` and already
/// include the taper and any error-model correction. With `clamp` the
/// values are floored at zero (appropriate when the underlying kernel is
/// nonnegative and only rounding noise can dip below); without it genuine
/// negative excursions are preserved.
pub(crate) fn density_from_coefficients(
    coef_a: &[f64],
    coef_b: &[f64],
    m: FejerOrder,
    grid: &[f64],
    clamp: bool,
) -> EstimateGrid {
    let mut values = Vec::with_capacity(grid.len());
    for &t in grid {
        let (s1, c1) = t.sin_cos();
        let (mut sk, mut ck) = (s1, c1);
        let mut acc = 0.0;
        for k in 0..coef_a.len() {
            acc += coef_a[k] * ck + coef_b[k] * sk;
            let next_s = sk * c1 + ck * s1;
            let next_c = ck * c1 - sk * s1;
            sk = next_s;
            ck = next_c;
        }
        let raw = (0.5 + acc) / PI;
        values.push(if clamp { raw.max(0.0) } else { raw });
    }
    EstimateGrid {
        theta: grid.to_vec(),
        values,
        kind: EstimateKind::Density,
        m: m.get(),
        origin: None,
    }
}

fn density_from_moments(moments: &TrigMoments, m: FejerOrder, grid: &[f64]) -> EstimateGrid {
    let coef_a: Vec<f64> = moments
        .a_hat
        .iter()
        .enumerate()
        .map(|(i, a)| m.taper(i as u32 + 1) * a)
        .collect();
    let coef_b: Vec<f64> = moments
        .b_hat
        .iter()
        .enumerate()
        .map(|(i, b)| m.taper(i as u32 + 1) * b)
        .collect();
    density_from_coefficients(&coef_a, &coef_b, m, grid, true)
}

/// Direct kernel-sum density estimate, `O(n G m)`; the reference
/// implementation against which the Fourier form is tested.
pub fn density_estimate_direct(
    sample: &AngleSample,
    m: FejerOrder,
    grid: &[f64],
) -> Result<EstimateGrid> {
    check_grid(grid)?;
    let total = sample.total_weight();
    let values = grid
        .iter()
        .map(|&t| {
            let mut acc = 0.0;
            for (i, &x) in sample.angles().iter().enumerate() {
                acc += sample.weight(i) * fejer_kernel(m, t - x);
            }
            acc / total
        })
        .collect();
    Ok(EstimateGrid {
        theta: grid.to_vec(),
        values,
        kind: EstimateKind::Density,
        m: m.get(),
        origin: None,
    })
}

/// Verify a grid is uniformly spaced covering one period; return the
/// spacing.
pub(crate) fn uniform_spacing(grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::NonUniformGrid);
    }
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if h <= 0.0 {
        return Err(Error::NonUniformGrid);
    }
    for pair in grid.windows(2) {
        if ((pair[1] - pair[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::NonUniformGrid);
        }
    }
    if (h * grid.len() as f64 - TWO_PI).abs() > 1e-6 {
        return Err(Error::NonUniformGrid);
    }
    Ok(h)
}

/// Lift a grid angle onto the arc `[origin, origin + 2 pi]`.
///
/// Angles congruent to the origin go to the near end (CDF zero) when they
/// are within half a period of `origin` as raw numbers, and to the far end
/// (CDF one) otherwise, so a grid `[-pi, pi]` with origin `-pi` evaluates to
/// zero at `-pi` and one at `pi`. Congruence is judged with a rounding
/// allowance: `origin + 2 pi` computed in floating point can land a few
/// ulps past the period, and without the allowance such a point would fold
/// back to the near end.
pub(crate) fn lift_onto_arc(theta: f64, origin: f64) -> f64 {
    let d = theta - origin;
    let mut r = d.rem_euclid(TWO_PI);
    if r >= TWO_PI {
        // rem_euclid of a tiny negative dividend can round up to the period.
        r = 0.0;
    }
    let tol = 1e-13 * theta.abs().max(origin.abs()).max(TWO_PI);
    if r <= tol || TWO_PI - r <= tol {
        return if d.abs() >= PI {
            origin + TWO_PI
        } else {
            origin
        };
    }
    origin + r
}

/// Fejer-kernel CDF estimate on a grid, measured from `origin` (Fourier form).
///
/// Grid angles are interpreted on the arc `[origin, origin + 2 pi]`. The
/// result is exactly zero at the origin, one at `origin + 2 pi`, lies in
/// `[0, 1]`, and is nondecreasing along the arc.
pub fn cdf_estimate(
    sample: &AngleSample,
    m: FejerOrder,
    origin: f64,
    grid: &[f64],
) -> Result<EstimateGrid> {
    check_grid(grid)?;
    if !origin.is_finite() {
        return Err(Error::InvalidParameter("cdf origin must be finite"));
    }
    let moments = trig_moments(sample, m.get(), false)?;
    let mean = sample.weighted_linear_mean();
    let coef_a: Vec<f64> = moments
        .a_hat
        .iter()
        .enumerate()
        .map(|(i, a)| m.taper(i as u32 + 1) * a / (i as f64 + 1.0))
        .collect();
    let coef_b: Vec<f64> = moments
        .b_hat
        .iter()
        .enumerate()
        .map(|(i, b)| m.taper(i as u32 + 1) * b / (i as f64 + 1.0))
        .collect();
    // Antiderivative of the estimate, lifted over the reals.
    let eval = |y: f64| -> f64 {
        let (s1, c1) = y.sin_cos();
        let (mut sk, mut ck) = (s1, c1);
        let mut acc = 0.0;
        for k in 0..coef_a.len() {
            acc += coef_a[k] * sk - coef_b[k] * ck;
            let next_s = sk * c1 + ck * s1;
            let next_c = ck * c1 - sk * s1;
            sk = next_s;
            ck = next_c;
        }
        (y + PI - mean) / TWO_PI + acc / PI
    };
    let base = eval(origin);
    let values = grid
        .iter()
        .map(|&t| (eval(lift_onto_arc(t, origin)) - base).clamp(0.0, 1.0))
        .collect();
    Ok(EstimateGrid {
        theta: grid.to_vec(),
        values,
        kind: EstimateKind::Cdf,
        m: m.get(),
        origin: Some(origin),
    })
}

/// Direct integrated-kernel-sum CDF estimate, `O(n G m)`; the reference
/// implementation against which the Fourier form is tested.
pub fn cdf_estimate_direct(
    sample: &AngleSample,
    m: FejerOrder,
    origin: f64,
    grid: &[f64],
) -> Result<EstimateGrid> {
    check_grid(grid)?;
    if !origin.is_finite() {
        return Err(Error::InvalidParameter("cdf origin must be finite"));
    }
    let total = sample.total_weight();
    let values = grid
        .iter()
        .map(|&t| {
            let lifted = lift_onto_arc(t, origin);
            let mut acc = 0.0;
            for (i, &x) in sample.angles().iter().enumerate() {
                acc += sample.weight(i)
                    * (integrated_kernel_lifted(m, lifted - x)
                        - integrated_kernel_lifted(m, origin - x));
            }
            (acc / total).clamp(0.0, 1.0)
        })
        .collect();
    Ok(EstimateGrid {
        theta: grid.to_vec(),
        values,
        kind: EstimateKind::Cdf,
        m: m.get(),
        origin: Some(origin),
    })
}

/// A uniform grid of `size` angles covering `[-pi, pi)`, the usual
/// evaluation grid for estimates and integrated errors.
pub fn uniform_grid(size: usize) -> Vec<f64> {
    (0..size)
        .map(|i| -PI + TWO_PI * i as f64 / size as f64)
        .collect()
}
