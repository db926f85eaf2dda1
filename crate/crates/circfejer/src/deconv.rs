//! Density estimation under angular measurement error.
//!
//! Each error model is a symmetric circular law with Fourier coefficients
//! `lambda_j = E[cos(j U)]`. Two regimes are supported:
//!
//! * **Target-noise ("Berkson") estimation**: the quantity of interest is
//!   the density of `X + U` but only `X` is observed. Coefficients of the
//!   estimate are *multiplied* by `lambda_j`, which only smooths; every
//!   error model is feasible at every order.
//! * **Observation-noise ("classical") unfolding**: `X + U` is observed
//!   and the density of `X` is wanted. Coefficients are *divided* by
//!   `lambda_j`, which fails at orders where `lambda_j` vanishes (the
//!   wrapped uniform has such zeros) and amplifies noise elsewhere, so the
//!   result may dip below zero; [`negative_mass`] quantifies the dip and
//!   [`clip_and_renormalize`] removes it.

use crate::error::{Error, Result};
use crate::estimators::{
    density_from_coefficients, reduce_angle, trig_moments, uniform_spacing, AngleSample,
    EstimateGrid,
};
use crate::kernelmath::{FejerOrder, TWO_PI};
use crate::simdist::{sample_von_mises, CircularModel, FourierCoeffs};
use crate::special::{bessel_i_ratios, log_bessel_i0};
use rand::Rng;
use rand_distr::{Distribution, Exp};

/// Classical unfolding refuses coefficients smaller than this.
const MIN_COEFF: f64 = 1e-10;

/// A symmetric circular measurement-error law.
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorModel {
    /// No error; all coefficients are one.
    None,
    /// Wrapped Laplace with the given `rate` (inverse scale):
    /// `lambda_j = rate^2 / (rate^2 + j^2)`.
    WrappedLaplace { rate: f64 },
    /// Uniform on `[-halfwidth, halfwidth]`: `lambda_j = sin(j a) / (j a)`.
    WrappedUniform { halfwidth: f64 },
    /// Von Mises centered at zero: `lambda_j = I_j(kappa) / I_0(kappa)`.
    VonMisesError { kappa: f64 },
}

impl ErrorModel {
    /// Check parameter domains.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::None => Ok(()),
            Self::WrappedLaplace { rate } => {
                if rate.is_finite() && *rate > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("error rate must be positive"))
                }
            }
            Self::WrappedUniform { halfwidth } => {
                if halfwidth.is_finite() && *halfwidth > 0.0 && *halfwidth <= std::f64::consts::PI {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(
                        "error halfwidth must lie in (0, pi]",
                    ))
                }
            }
            Self::VonMisesError { kappa } => {
                if kappa.is_finite() && *kappa >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(
                        "error concentration must be nonnegative",
                    ))
                }
            }
        }
    }

    /// Fourier coefficients `lambda_0..=lambda_m` (`lambda_0 = 1`).
    pub fn lambda_upto(&self, m: u32) -> Vec<f64> {
        match self {
            Self::None => vec![1.0; m as usize + 1],
            Self::WrappedLaplace { rate } => (0..=m)
                .map(|j| {
                    let jf = f64::from(j);
                    rate * rate / (rate * rate + jf * jf)
                })
                .collect(),
            Self::WrappedUniform { halfwidth } => (0..=m)
                .map(|j| {
                    if j == 0 {
                        1.0
                    } else {
                        let ja = f64::from(j) * halfwidth;
                        ja.sin() / ja
                    }
                })
                .collect(),
            Self::VonMisesError { kappa } => bessel_i_ratios(*kappa, m as usize),
        }
    }

    /// The coefficient at a single frequency.
    pub fn lambda(&self, j: u32) -> f64 {
        self.lambda_upto(j)[j as usize]
    }

    /// Density of the error law at `u`, when it has one (the no-error model
    /// is a point mass).
    pub fn density(&self, u: f64) -> Option<f64> {
        match self {
            Self::None => None,
            Self::WrappedLaplace { rate } => {
                let v = u.rem_euclid(TWO_PI);
                let norm = 1.0 - (-TWO_PI * rate).exp();
                Some(rate / 2.0 * ((-rate * v).exp() + (-rate * (TWO_PI - v)).exp()) / norm)
            }
            Self::WrappedUniform { halfwidth } => Some(if reduce_angle(u).abs() < *halfwidth {
                1.0 / (2.0 * halfwidth)
            } else {
                0.0
            }),
            Self::VonMisesError { kappa } => {
                let log_i0e = log_bessel_i0(*kappa) - kappa;
                Some((kappa * (u.cos() - 1.0) - log_i0e).exp() / TWO_PI)
            }
        }
    }

    /// Draw one error angle.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::None => 0.0,
            Self::WrappedLaplace { rate } => {
                // A Laplace variate is the difference of two exponentials.
                let exp = Exp::new(*rate).expect("validated parameters");
                reduce_angle(exp.sample(rng) - exp.sample(rng))
            }
            Self::WrappedUniform { halfwidth } => rng.gen_range(-halfwidth..*halfwidth),
            Self::VonMisesError { kappa } => sample_von_mises(0.0, *kappa, rng),
        }
    }
}

/// Density estimate for the noise-added target `X + U` from clean
/// observations of `X`: empirical moments shrunk by the error coefficients.
pub fn berkson_estimate(
    sample: &AngleSample,
    m: FejerOrder,
    error: &ErrorModel,
    grid: &[f64],
) -> Result<EstimateGrid> {
    error.validate()?;
    let moments = trig_moments(sample, m.get(), false)?;
    let lambda = error.lambda_upto(m.get());
    let coef_a: Vec<f64> = (1..=m.get())
        .map(|k| m.taper(k) * lambda[k as usize] * moments.a_hat[(k - 1) as usize])
        .collect();
    let coef_b: Vec<f64> = (1..=m.get())
        .map(|k| m.taper(k) * lambda[k as usize] * moments.b_hat[(k - 1) as usize])
        .collect();
    // Shrunk coefficients keep the kernel average nonnegative only for
    // genuine densities of X + U; the raw series can still round below
    // zero, so clamp as for the plain estimate.
    Ok(density_from_coefficients(&coef_a, &coef_b, m, grid, true))
}

/// Density estimate for the clean signal `X` from noisy observations
/// `X + U`: empirical moments divided by the error coefficients.
///
/// Fails with [`Error::VanishingCoefficient`] when any required
/// `lambda_j` is smaller than `1e-10` in magnitude (the order must then be
/// reduced). Values are *not* clamped at zero: noise amplification can
/// produce genuinely negative excursions, which [`clip_and_renormalize`]
/// removes if a proper density is required.
pub fn classical_estimate(
    sample: &AngleSample,
    m: FejerOrder,
    error: &ErrorModel,
    grid: &[f64],
) -> Result<EstimateGrid> {
    error.validate()?;
    let lambda = error.lambda_upto(m.get());
    for (j, &l) in lambda.iter().enumerate().skip(1) {
        if l.abs() < MIN_COEFF {
            return Err(Error::VanishingCoefficient {
                index: j as u32,
                m: m.get(),
            });
        }
    }
    let moments = trig_moments(sample, m.get(), false)?;
    let coef_a: Vec<f64> = (1..=m.get())
        .map(|k| m.taper(k) * moments.a_hat[(k - 1) as usize] / lambda[k as usize])
        .collect();
    let coef_b: Vec<f64> = (1..=m.get())
        .map(|k| m.taper(k) * moments.b_hat[(k - 1) as usize] / lambda[k as usize])
        .collect();
    Ok(density_from_coefficients(&coef_a, &coef_b, m, grid, false))
}

/// Fourier coefficients of a model convolved with an error law
/// (coefficientwise product).
pub fn convolve_model(coeffs: &FourierCoeffs, error: &ErrorModel) -> FourierCoeffs {
    let lambda = error.lambda_upto(coeffs.len() as u32);
    FourierCoeffs {
        a: coeffs
            .a
            .iter()
            .enumerate()
            .map(|(i, a)| a * lambda[i + 1])
            .collect(),
        b: coeffs
            .b
            .iter()
            .enumerate()
            .map(|(i, b)| b * lambda[i + 1])
            .collect(),
    }
}

/// Density of `X + U` on a grid, where `X` follows `model` and `U` the
/// error law, via the coefficientwise product of their expansions.
pub fn convolved_density_on_grid(
    model: &CircularModel,
    error: &ErrorModel,
    grid: &[f64],
) -> Vec<f64> {
    let coeffs = convolve_model(&model.fourier_coeffs_auto(), error);
    grid.iter()
        .map(|&t| {
            let mut acc = 0.5;
            for k in (1..=coeffs.len()).rev() {
                let kf = k as f64;
                acc += coeffs.a[k - 1] * (kf * t).cos() + coeffs.b[k - 1] * (kf * t).sin();
            }
            acc / std::f64::consts::PI
        })
        .collect()
}

/// Total mass below zero of a density estimate on its (uniform) grid.
pub fn negative_mass(estimate: &EstimateGrid) -> Result<f64> {
    let h = uniform_spacing(&estimate.theta)?;
    Ok(estimate.values.iter().map(|v| (-v).max(0.0)).sum::<f64>() * h)
}

/// Clip a density estimate at zero and rescale to unit mass; returns the
/// repaired estimate and the mass that was clipped away.
pub fn clip_and_renormalize(estimate: &EstimateGrid) -> Result<(EstimateGrid, f64)> {
    let h = uniform_spacing(&estimate.theta)?;
    let clipped = negative_mass(estimate)?;
    let positive: f64 = estimate.values.iter().map(|v| v.max(0.0)).sum::<f64>() * h;
    if positive <= 0.0 {
        return Err(Error::InvalidParameter(
            "estimate has no positive mass to renormalize",
        ));
    }
    let mut repaired = estimate.clone();
    for v in &mut repaired.values {
        *v = v.max(0.0) / positive;
    }
    Ok((repaired, clipped))
}
