//! Plug-in selection of the polynomial order (the smoothing parameter).
//!
//! The density rule minimizes the leading mean integrated squared error
//! terms `theta1 / m^2 + m / (3 pi n)`, giving `m = (6 pi theta1 n)^(1/3)`.
//! The CDF rule balances `theta2 / m^2` against `(ln m) / n` terms and
//! solves its stationarity condition through the Lambert W function. Both
//! need a derivative functional of the unknown density, estimated either
//! parametrically (von Mises maximum likelihood) or nonparametrically
//! (truncated moment series).

use crate::error::{Error, Result};
use crate::estimators::{trig_moments, AngleSample};
use crate::kernelmath::{lambert_w0, FejerOrder, TWO_PI};
use crate::special::{bessel_i_ratios, log_bessel_i0};
use std::f64::consts::{E, PI};

/// Samples at least this close to a point mass cannot be fitted.
const DEGENERATE_RESULTANT: f64 = 1.0 - 1e-12;
/// Resultant lengths above this merit a warning flag: the fitted
/// concentration is so large that plug-in rules become unreliable.
const NEAR_DEGENERATE_RESULTANT: f64 = 0.999;
/// Series length for the CDF functional of a fitted von Mises law.
const CDF_SERIES_LEN: usize = 512;

/// Von Mises parameters fitted by maximum likelihood.
#[derive(Debug, Clone, Copy)]
pub struct VonMisesFit {
    /// Fitted mean direction, in `[-pi, pi)`.
    pub mu_hat: f64,
    /// Fitted concentration, `>= 0`.
    pub kappa_hat: f64,
    /// Mean resultant length of the sample.
    pub r_bar: f64,
}

/// How a derivative functional estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theta1Method {
    /// Von Mises fit, functional computed from the fitted density.
    ParametricVonMises,
    /// Truncated series of squared empirical moments (biased upward by the
    /// moment sampling noise).
    NonparametricBiased,
    /// Truncated series of the unbiased pair-averaged squared moments.
    NonparametricUnbiased,
}

/// An estimate of `theta1 = int f'(t)^2 dt` with provenance flags.
#[derive(Debug, Clone, Copy)]
pub struct Theta1Estimate {
    pub value: f64,
    pub method: Theta1Method,
    /// Series truncation used (nonparametric methods).
    pub truncation: Option<u32>,
    /// Fitted concentration (parametric method).
    pub kappa_hat: Option<f64>,
    /// True when a negative unbiased estimate was clamped to zero.
    pub clamped: bool,
    /// True when the sample is so concentrated the fit is suspect.
    pub near_degenerate: bool,
}

/// What the selected order will be used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandwidthTarget {
    Density,
    Cdf,
    /// Density estimation after unfolding additive wrapped-Laplace noise.
    ClassicalDensity,
}

/// Rule-specific byproducts of the order selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthAux {
    None,
    /// CDF rule internals: the constant `c` of the stationarity condition
    /// and the fitted density at the origin.
    Cdf {
        c: f64,
        density_at_origin: f64,
    },
    /// Error scale of the noise being unfolded.
    Classical {
        error_scale: f64,
    },
}

/// A selected order together with what produced it.
#[derive(Debug, Clone)]
pub struct BandwidthResult {
    pub m: FejerOrder,
    pub target: BandwidthTarget,
    /// The derivative functional the rule consumed.
    pub functional: f64,
    /// True when the functional was (numerically) zero and the order fell
    /// back to its minimum: the data look uniform at this resolution.
    pub uniform_flagged: bool,
    pub aux: BandwidthAux,
}

fn weighted_resultant(sample: &AngleSample) -> (f64, f64) {
    let mut c = 0.0;
    let mut s = 0.0;
    for (i, &x) in sample.angles().iter().enumerate() {
        let w = sample.weight(i);
        c += w * x.cos();
        s += w * x.sin();
    }
    (c / sample.total_weight(), s / sample.total_weight())
}

fn bessel_a_ratio(kappa: f64) -> f64 {
    if kappa <= 0.0 {
        0.0
    } else {
        bessel_i_ratios(kappa, 1)[1]
    }
}

/// Fit a von Mises law by maximum likelihood (weighted observations use
/// their weights as multiplicities).
///
/// Newton iteration on the resultant equation `A(kappa) = r_bar` starting
/// from the rational approximation `r (2 - r^2) / (1 - r^2)`, where
/// `A = I_1/I_0` and `A' = 1 - A^2 - A/kappa`. Samples with `r_bar`
/// indistinguishable from one are rejected as degenerate.
pub fn vm_ml_fit(sample: &AngleSample) -> Result<VonMisesFit> {
    let (c, s) = weighted_resultant(sample);
    let r_bar = (c * c + s * s).sqrt();
    let mu_hat = if r_bar < 1e-14 { 0.0 } else { s.atan2(c) };
    if r_bar >= DEGENERATE_RESULTANT {
        return Err(Error::DegenerateSample { r_bar });
    }
    if r_bar < 1e-8 {
        return Ok(VonMisesFit {
            mu_hat,
            kappa_hat: 0.0,
            r_bar,
        });
    }
    let mut kappa = r_bar * (2.0 - r_bar * r_bar) / (1.0 - r_bar * r_bar);
    for _ in 0..100 {
        let a = bessel_a_ratio(kappa);
        let residual = a - r_bar;
        if residual.abs() < 1e-13 {
            break;
        }
        let slope = 1.0 - a * a - a / kappa;
        let next = kappa - residual / slope;
        // The equation is monotone; keep the iterate in the positive cone.
        let next = if next > 0.0 { next } else { kappa / 2.0 };
        let converged = (next - kappa).abs() <= 1e-13 * kappa.max(1.0);
        kappa = next;
        if converged {
            break;
        }
    }
    Ok(VonMisesFit {
        mu_hat,
        kappa_hat: kappa,
        r_bar,
    })
}

/// Von Mises density with concentration `kappa` at angular offset `delta`
/// from the mean, in the overflow-safe exponential form.
fn vm_density_at(kappa: f64, delta: f64) -> f64 {
    let log_i0e = log_bessel_i0(kappa) - kappa;
    (kappa * (delta.cos() - 1.0) - log_i0e).exp() / TWO_PI
}

/// `int f'(t)^2 dt` for a von Mises density, by composite Simpson
/// quadrature of `kappa^2 sin(d)^2 f(d)^2` over one period.
fn vm_theta1(kappa: f64) -> f64 {
    if kappa == 0.0 {
        return 0.0;
    }
    crate::kernelmath::simpson(
        |d| {
            let fd = kappa * d.sin() * vm_density_at(kappa, d);
            fd * fd
        },
        -PI,
        PI,
        4096,
    )
}

/// Estimate `theta1` by fitting a von Mises law.
pub fn theta1_parametric_vm(sample: &AngleSample) -> Result<Theta1Estimate> {
    let fit = vm_ml_fit(sample)?;
    Ok(Theta1Estimate {
        value: vm_theta1(fit.kappa_hat),
        method: Theta1Method::ParametricVonMises,
        truncation: None,
        kappa_hat: Some(fit.kappa_hat),
        clamped: false,
        near_degenerate: fit.r_bar > NEAR_DEGENERATE_RESULTANT,
    })
}

/// Default series truncation for the nonparametric functional estimates:
/// `round(2 n^(1/4))`, at least one.
pub fn default_truncation(n: usize) -> u32 {
    (2.0 * (n as f64).powf(0.25)).round().max(1.0) as u32
}

/// Estimate `theta1 = (1/pi) sum k^2 c_k` from the empirical trigonometric
/// moments, truncated at `truncation` (default `round(2 n^(1/4))`).
///
/// The biased variant sums `k^2 (a_k^2 + b_k^2)`; the unbiased variant sums
/// the pair-averaged `k^2 c_k` and clamps a negative total to zero (the
/// `clamped` flag records this). Unbiased estimation needs at least two
/// unweighted observations.
pub fn theta1_nonparametric(
    sample: &AngleSample,
    truncation: Option<u32>,
    unbiased: bool,
) -> Result<Theta1Estimate> {
    let truncation = truncation.unwrap_or_else(|| default_truncation(sample.len()));
    let moments = trig_moments(sample, truncation, unbiased)?;
    let mut acc = 0.0;
    for k in (1..=truncation).rev() {
        let idx = (k - 1) as usize;
        let c_k = match &moments.c_hat {
            Some(c) => c[idx],
            None => {
                moments.a_hat[idx] * moments.a_hat[idx] + moments.b_hat[idx] * moments.b_hat[idx]
            }
        };
        acc += f64::from(k) * f64::from(k) * c_k;
    }
    let raw = acc / PI;
    let clamped = raw < 0.0;
    Ok(Theta1Estimate {
        value: raw.max(0.0),
        method: if unbiased {
            Theta1Method::NonparametricUnbiased
        } else {
            Theta1Method::NonparametricBiased
        },
        truncation: Some(truncation),
        kappa_hat: None,
        clamped,
        near_degenerate: false,
    })
}

fn check_functional(value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::InvalidParameter(
            "derivative functional must be finite and nonnegative",
        ));
    }
    Ok(())
}

/// Plug-in order for density estimation: `m = round((6 pi theta1 n)^(1/3))`,
/// at least one. A zero functional flags the uniform fallback `m = 1`.
pub fn m_opt_density(theta1: f64, n: usize) -> Result<BandwidthResult> {
    check_functional(theta1)?;
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let raw = (6.0 * PI * theta1 * n as f64).cbrt();
    let rounded = raw.round().max(1.0);
    Ok(BandwidthResult {
        m: FejerOrder::new(rounded as u32)?,
        target: BandwidthTarget::Density,
        functional: theta1,
        uniform_flagged: theta1 <= 0.0,
        aux: BandwidthAux::None,
    })
}

/// Continuous solution of the CDF stationarity condition `m (ln m - 1) =
/// c n`, namely `m = c n / W0(c n / e)`; returns the fallback pair
/// `(1, true)` when `c n <= e` (no solution above one).
pub(crate) fn cdf_m_from_c(c: f64, n: f64) -> Result<(f64, bool)> {
    let z = c * n;
    if z <= E || z.is_nan() {
        return Ok((1.0, true));
    }
    Ok((z / lambert_w0(z / E)?, false))
}

/// Plug-in order for CDF estimation from `origin`, by fitting a von Mises
/// law, computing the CDF functional
/// `theta2 = (1/pi) sum A_k^2 + (2/pi) (sum A_k sin(k (mu - origin)))^2`
/// and the fitted density at the origin, and solving `m (ln m - 1) = c n`
/// with `c = pi theta2 / (1 + 2 pi f(origin))`.
pub fn m_opt_cdf(sample: &AngleSample, origin: f64) -> Result<BandwidthResult> {
    let fit = vm_ml_fit(sample)?;
    let ratios = bessel_i_ratios(fit.kappa_hat, CDF_SERIES_LEN);
    let mut sum_sq = 0.0;
    let mut cross = 0.0;
    for k in (1..=CDF_SERIES_LEN).rev() {
        sum_sq += ratios[k] * ratios[k];
        cross += ratios[k] * (k as f64 * (fit.mu_hat - origin)).sin();
    }
    let theta2 = sum_sq / PI + 2.0 * cross * cross / PI;
    let density_at_origin = vm_density_at(fit.kappa_hat, origin - fit.mu_hat);
    let c = PI * theta2 / (1.0 + TWO_PI * density_at_origin);
    let n = effective_n(sample);
    let (m_cont, flagged) = cdf_m_from_c(c, n as f64)?;
    Ok(BandwidthResult {
        m: FejerOrder::new(m_cont.round().max(1.0) as u32)?,
        target: BandwidthTarget::Cdf,
        functional: theta2,
        uniform_flagged: flagged,
        aux: BandwidthAux::Cdf {
            c,
            density_at_origin,
        },
    })
}

/// Plug-in order for density estimation after unfolding wrapped-Laplace
/// noise with the given scale: `m = round((42 pi theta1 n / scale^4)^(1/7))`,
/// at least one.
pub fn m_opt_classical_wl(theta1: f64, n: usize, error_scale: f64) -> Result<BandwidthResult> {
    check_functional(theta1)?;
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if !error_scale.is_finite() || error_scale <= 0.0 {
        return Err(Error::InvalidParameter("error scale must be positive"));
    }
    let raw = (42.0 * PI * theta1 * n as f64 / error_scale.powi(4)).powf(1.0 / 7.0);
    Ok(BandwidthResult {
        m: FejerOrder::new(raw.round().max(1.0) as u32)?,
        target: BandwidthTarget::ClassicalDensity,
        functional: theta1,
        uniform_flagged: theta1 <= 0.0,
        aux: BandwidthAux::Classical { error_scale },
    })
}

/// Effective number of observations: the count for unweighted samples, the
/// rounded total weight for grouped (weighted) ones.
pub fn effective_n(sample: &AngleSample) -> usize {
    if sample.is_weighted() {
        sample.total_weight().round().max(1.0) as usize
    } else {
        sample.len()
    }
}
