//! Reference circular distributions, their exact functionals, samplers, and
//! integrated squared error utilities for simulation studies.
//!
//! Models are defined through their Fourier coefficients
//! `a_k = E[cos k X]`, `b_k = E[sin k X]`; every analytic quantity used by
//! the replication harness (densities, CDFs, derivative functionals,
//! integrated squared bias, exact MISE, theoretical origin) is computed from
//! those coefficients or from closed forms.

use crate::error::{Error, Result};
use crate::estimators::{reduce_angle, uniform_spacing, AngleSample, EstimateGrid, EstimateKind};
use crate::kernelmath::{FejerOrder, TWO_PI};
use crate::special::{bessel_i_ratios, log_bessel_i0};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Normal};
use std::f64::consts::PI;

/// Hard truncation for automatically sized coefficient expansions.
const MAX_COEFF: usize = 4096;
/// Coefficient magnitudes below this are treated as zero.
const COEFF_TOL: f64 = 1e-14;

/// A circular distribution usable as simulation truth.
#[derive(Debug, Clone, PartialEq)]
pub enum CircularModel {
    /// Von Mises with mean direction `mu` and concentration `kappa >= 0`.
    VonMises { mu: f64, kappa: f64 },
    /// Wrapped normal with mean direction `mu` and mean resultant length
    /// `rho` in `[0, 1)`; the wrapped variance is `-2 ln rho`.
    WrappedNormal { mu: f64, rho: f64 },
    /// Wrapped Cauchy with mean direction `mu` and mean resultant length
    /// `rho` in `[0, 1)`; the Cauchy scale is `-ln rho`.
    WrappedCauchy { mu: f64, rho: f64 },
    /// The circular uniform distribution.
    Uniform,
    /// Two-component mixture: `first` with probability `p`, else `second`.
    Mixture {
        first: Box<CircularModel>,
        second: Box<CircularModel>,
        p: f64,
    },
}

/// Fourier coefficients `a_k = E[cos k X]`, `b_k = E[sin k X]` for
/// frequencies `k = 1..=len`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoeffs {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl FourierCoeffs {
    /// Number of frequencies carried.
    pub fn len(&self) -> usize {
        self.a.len()
    }

    /// True when no nonzero frequency is carried (the uniform law).
    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Squared modulus `a_k^2 + b_k^2` at frequency `k` (1-based); zero
    /// beyond the truncation.
    pub fn modulus_sq(&self, k: usize) -> f64 {
        if k == 0 || k > self.len() {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        self.a[k - 1] * self.a[k - 1] + self.b[k - 1] * self.b[k - 1]
    }
}

/// Convenience constructor for mixtures.
pub fn mixture(first: CircularModel, second: CircularModel, p: f64) -> CircularModel {
    CircularModel::Mixture {
        first: Box::new(first),
        second: Box::new(second),
        p,
    }
}

impl CircularModel {
    /// Check parameter domains (recursively for mixtures).
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::VonMises { mu, kappa } => {
                if !mu.is_finite() {
                    return Err(Error::InvalidParameter("von Mises mean must be finite"));
                }
                if !kappa.is_finite() || *kappa < 0.0 {
                    return Err(Error::InvalidParameter(
                        "von Mises concentration must be nonnegative",
                    ));
                }
            }
            Self::WrappedNormal { mu, rho } | Self::WrappedCauchy { mu, rho } => {
                if !mu.is_finite() {
                    return Err(Error::InvalidParameter("wrapped mean must be finite"));
                }
                if !rho.is_finite() || !(0.0..1.0).contains(rho) {
                    return Err(Error::InvalidParameter(
                        "mean resultant length must lie in [0, 1)",
                    ));
                }
            }
            Self::Uniform => {}
            Self::Mixture { first, second, p } => {
                if !p.is_finite() || !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidParameter("mixture weight must lie in [0, 1]"));
                }
                first.validate()?;
                second.validate()?;
            }
        }
        Ok(())
    }

    /// Fourier coefficients up to frequency `k_max`.
    pub fn fourier_coeffs(&self, k_max: usize) -> FourierCoeffs {
        let mut a = vec![0.0; k_max];
        let mut b = vec![0.0; k_max];
        self.add_coeffs(k_max, 1.0, &mut a, &mut b);
        FourierCoeffs { a, b }
    }

    fn add_coeffs(&self, k_max: usize, weight: f64, a: &mut [f64], b: &mut [f64]) {
        match self {
            Self::VonMises { mu, kappa } => {
                let ratios = bessel_i_ratios(*kappa, k_max);
                for k in 1..=k_max {
                    let kf = k as f64;
                    a[k - 1] += weight * ratios[k] * (kf * mu).cos();
                    b[k - 1] += weight * ratios[k] * (kf * mu).sin();
                }
            }
            Self::WrappedNormal { mu, rho } => {
                if *rho > 0.0 {
                    let log_rho = rho.ln();
                    for k in 1..=k_max {
                        let kf = k as f64;
                        let mag = (kf * kf * log_rho).exp();
                        a[k - 1] += weight * mag * (kf * mu).cos();
                        b[k - 1] += weight * mag * (kf * mu).sin();
                    }
                }
            }
            Self::WrappedCauchy { mu, rho } => {
                if *rho > 0.0 {
                    let log_rho = rho.ln();
                    for k in 1..=k_max {
                        let kf = k as f64;
                        let mag = (kf * log_rho).exp();
                        a[k - 1] += weight * mag * (kf * mu).cos();
                        b[k - 1] += weight * mag * (kf * mu).sin();
                    }
                }
            }
            Self::Uniform => {}
            Self::Mixture { first, second, p } => {
                first.add_coeffs(k_max, weight * p, a, b);
                second.add_coeffs(k_max, weight * (1.0 - p), a, b);
            }
        }
    }

    /// Fourier coefficients truncated where the modulus drops below `1e-14`
    /// (or at frequency 4096, whichever comes first).
    pub fn fourier_coeffs_auto(&self) -> FourierCoeffs {
        let mut coeffs = self.fourier_coeffs(MAX_COEFF);
        let mut keep = 0;
        for k in (1..=coeffs.len()).rev() {
            if coeffs.modulus_sq(k).sqrt() >= COEFF_TOL {
                keep = k;
                break;
            }
        }
        coeffs.a.truncate(keep);
        coeffs.b.truncate(keep);
        coeffs
    }

    /// Density at `theta`, in closed form.
    pub fn true_density(&self, theta: f64) -> f64 {
        match self {
            Self::VonMises { mu, kappa } => {
                let log_i0e = log_bessel_i0(*kappa) - kappa;
                (kappa * ((theta - mu).cos() - 1.0) - log_i0e).exp() / TWO_PI
            }
            Self::WrappedNormal { mu, rho } => {
                if *rho == 0.0 {
                    return 1.0 / TWO_PI;
                }
                let log_rho = rho.ln();
                let delta = theta - mu;
                let mut acc = 0.5;
                for k in 1..=MAX_COEFF {
                    let kf = k as f64;
                    let mag = (kf * kf * log_rho).exp();
                    if mag < 1e-17 {
                        break;
                    }
                    acc += mag * (kf * delta).cos();
                }
                acc / PI
            }
            Self::WrappedCauchy { mu, rho } => {
                let delta = theta - mu;
                (1.0 - rho * rho) / (TWO_PI * (1.0 + rho * rho - 2.0 * rho * delta.cos()))
            }
            Self::Uniform => 1.0 / TWO_PI,
            Self::Mixture { first, second, p } => {
                p * first.true_density(theta) + (1.0 - p) * second.true_density(theta)
            }
        }
    }

    /// CDF at `theta`, measured along the arc `[origin, origin + 2 pi]`.
    ///
    /// Convenience form that rebuilds the coefficient expansion on every
    /// call; use [`cdf_on_grid`] to evaluate many points.
    pub fn true_cdf(&self, theta: f64, origin: f64) -> f64 {
        let coeffs = self.fourier_coeffs_auto();
        cdf_from_coeffs(&coeffs, origin, theta)
    }

    /// The squared-derivative functional `theta1 = int f'(t)^2 dt
    /// = (1/pi) sum k^2 (a_k^2 + b_k^2)`.
    pub fn theta1(&self) -> f64 {
        let coeffs = self.fourier_coeffs_auto();
        let mut acc = 0.0;
        for k in (1..=coeffs.len()).rev() {
            acc += (k as f64).powi(2) * coeffs.modulus_sq(k);
        }
        acc / PI
    }

    /// The CDF-target functional
    /// `theta2(origin) = (1/pi) sum (a_k^2 + b_k^2)
    ///  + (2/pi) (sum (b_k cos(k t0) - a_k sin(k t0)))^2`.
    pub fn theta2(&self, origin: f64) -> f64 {
        let coeffs = self.fourier_coeffs_auto();
        let mut sum_sq = 0.0;
        let mut cross = 0.0;
        for k in (1..=coeffs.len()).rev() {
            let kf = k as f64;
            sum_sq += coeffs.modulus_sq(k);
            cross += coeffs.b[k - 1] * (kf * origin).cos() - coeffs.a[k - 1] * (kf * origin).sin();
        }
        sum_sq / PI + 2.0 * cross * cross / PI
    }

    /// Exact integrated squared bias of the order-`m` tapered projection:
    /// `(1/pi) [ sum_{k<=m} (k/(m+1))^2 c_k + sum_{k>m} c_k ]` with
    /// `c_k = a_k^2 + b_k^2`.
    pub fn isb_exact(&self, m: FejerOrder) -> f64 {
        let coeffs = self.fourier_coeffs_auto();
        let mp1 = f64::from(m.get() + 1);
        let mut acc = 0.0;
        for k in (1..=coeffs.len()).rev() {
            let c = coeffs.modulus_sq(k);
            if k <= m.get() as usize {
                let frac = k as f64 / mp1;
                acc += frac * frac * c;
            } else {
                acc += c;
            }
        }
        acc / PI
    }

    /// Exact finite-sample MISE of the order-`m` density estimate from `n`
    /// independent observations: integrated squared bias plus integrated
    /// variance `(alpha - 1/(2 pi) - (1/pi) sum gamma_k^2 c_k)/n`.
    pub fn exact_mise_density(&self, m: FejerOrder, n: usize) -> f64 {
        let coeffs = self.fourier_coeffs_auto();
        let alpha = crate::kernelmath::kernel_moments_exact(m).alpha;
        let mut tapered = 0.0;
        for k in (1..=coeffs.len()).rev() {
            let g = m.taper(k as u32);
            tapered += g * g * coeffs.modulus_sq(k);
        }
        self.isb_exact(m) + (alpha - 1.0 / TWO_PI - tapered / PI) / n as f64
    }

    /// The origin minimizing the large-sample CDF criterion
    /// `int F(t)(1 - F(t)) dt` over one period, located on an 8192-point
    /// grid via prefix sums. For distributions with a single mode this is
    /// the antipode of the mode.
    pub fn optimal_origin(&self) -> f64 {
        const G: usize = 8192;
        let coeffs = self.fourier_coeffs_auto();
        let h = TWO_PI / G as f64;
        let u: Vec<f64> = (0..G)
            .map(|j| cdf_from_coeffs(&coeffs, -PI, -PI + h * j as f64))
            .collect();
        let sum_u: f64 = u.iter().sum();
        let sum_u2: f64 = u.iter().map(|x| x * x).sum();
        let gf = G as f64;
        let mut best = (f64::INFINITY, 0usize);
        let mut prefix = 0.0; // sum of u_j for j < k
        for (k, &uk) in u.iter().enumerate() {
            // Lifted CDF from origin k: adds 1 for indices j < k.
            let sum_f = sum_u + k as f64 - gf * uk;
            let sum_f2 =
                sum_u2 + 2.0 * prefix + k as f64 - 2.0 * uk * (sum_u + k as f64) + gf * uk * uk;
            let criterion = h * (sum_f - sum_f2);
            if criterion < best.0 {
                best = (criterion, k);
            }
            prefix += uk;
        }
        -PI + h * best.1 as f64
    }

    /// Draw one observation.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::VonMises { mu, kappa } => sample_von_mises(*mu, *kappa, rng),
            Self::WrappedNormal { mu, rho } => {
                if *rho == 0.0 {
                    return rng.gen_range(-PI..PI);
                }
                let sigma = (-2.0 * rho.ln()).sqrt();
                let normal = Normal::new(*mu, sigma).expect("validated parameters");
                reduce_angle(normal.sample(rng))
            }
            Self::WrappedCauchy { mu, rho } => {
                if *rho == 0.0 {
                    return rng.gen_range(-PI..PI);
                }
                let cauchy = Cauchy::new(*mu, -rho.ln()).expect("validated parameters");
                loop {
                    let v = cauchy.sample(rng);
                    if v.is_finite() {
                        return reduce_angle(v);
                    }
                }
            }
            Self::Uniform => rng.gen_range(-PI..PI),
            Self::Mixture { first, second, p } => {
                // Degenerate weights skip the Bernoulli draw so a weight-one
                // mixture is bit-identical to its first component.
                if *p >= 1.0 {
                    first.sample_one(rng)
                } else if *p <= 0.0 {
                    second.sample_one(rng)
                } else if rng.gen::<f64>() < *p {
                    first.sample_one(rng)
                } else {
                    second.sample_one(rng)
                }
            }
        }
    }

    /// Draw `n` observations as an unweighted sample.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<AngleSample> {
        self.validate()?;
        let mut angles = Vec::with_capacity(n);
        for _ in 0..n {
            angles.push(self.sample_one(rng));
        }
        AngleSample::new(angles)
    }
}

/// Best-Fisher rejection sampler for the von Mises distribution.
pub(crate) fn sample_von_mises<R: Rng + ?Sized>(mu: f64, kappa: f64, rng: &mut R) -> f64 {
    if kappa < 1e-10 {
        return rng.gen_range(-PI..PI);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.gen();
            let angle = mu + (u3 - 0.5).signum() * f.clamp(-1.0, 1.0).acos();
            return reduce_angle(angle);
        }
    }
}

/// Evaluate the CDF implied by a coefficient expansion along the arc
/// starting at `origin`.
fn cdf_from_coeffs(coeffs: &FourierCoeffs, origin: f64, theta: f64) -> f64 {
    let lifted = crate::estimators::lift_onto_arc(theta, origin);
    let mut acc = 0.0;
    for k in (1..=coeffs.len()).rev() {
        let kf = k as f64;
        acc += (coeffs.a[k - 1] * ((kf * lifted).sin() - (kf * origin).sin())
            - coeffs.b[k - 1] * ((kf * lifted).cos() - (kf * origin).cos()))
            / kf;
    }
    ((lifted - origin) / TWO_PI + acc / PI).clamp(0.0, 1.0)
}

/// True CDF values on a grid (coefficients computed once).
pub fn cdf_on_grid(model: &CircularModel, origin: f64, grid: &[f64]) -> Vec<f64> {
    let coeffs = model.fourier_coeffs_auto();
    grid.iter()
        .map(|&t| cdf_from_coeffs(&coeffs, origin, t))
        .collect()
}

/// A reproducible random stream: ChaCha8 keyed from `(master_seed,
/// stream_id)` through a splitmix64 expansion, so each replication of an
/// experiment gets an independent, replayable stream.
pub struct RngStream {
    rng: ChaCha8Rng,
}

pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

impl RngStream {
    /// Stream `stream_id` of the generator family keyed by `master_seed`.
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut state = master_seed ^ stream_id.wrapping_mul(0xD2B74407B1CE6E93);
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self {
            rng: ChaCha8Rng::from_seed(seed),
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Integrated squared difference between estimate values and truth values on
/// the estimate's (uniform, one-period) grid.
pub fn ise_between(estimate: &EstimateGrid, truth: &[f64]) -> Result<f64> {
    if truth.len() != estimate.values.len() {
        return Err(Error::LengthMismatch {
            angles: estimate.values.len(),
            weights: truth.len(),
        });
    }
    let h = uniform_spacing(&estimate.theta)?;
    let acc: f64 = estimate
        .values
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t) * (e - t))
        .sum();
    Ok(acc * h)
}

/// Integrated squared error of an estimate against a model: the trapezoid
/// integral of the squared difference over the estimate's grid, which must
/// be uniform over one period (for a CDF, one period from its origin).
pub fn ise(estimate: &EstimateGrid, model: &CircularModel) -> Result<f64> {
    let truth = match estimate.kind {
        EstimateKind::Density => estimate
            .theta
            .iter()
            .map(|&t| model.true_density(t))
            .collect::<Vec<_>>(),
        EstimateKind::Cdf => {
            let origin = estimate
                .origin
                .ok_or(Error::InvalidParameter("cdf estimate carries no origin"))?;
            cdf_on_grid(model, origin, &estimate.theta)
        }
    };
    ise_between(estimate, &truth)
}

/// Streaming accumulator for integrated squared errors across replications:
/// tracks the mean ISE and the mean squared ISE.
#[derive(Debug, Clone, Default)]
pub struct IseAccumulator {
    count: u64,
    sum: f64,
    sum_sq: f64,
}

impl IseAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record one replication's ISE.
    pub fn push(&mut self, ise: f64) {
        self.count += 1;
        self.sum += ise;
        self.sum_sq += ise * ise;
    }

    /// Number of replications recorded.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Mean ISE (the usual Monte Carlo MISE estimate).
    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sum / self.count as f64
        }
    }

    /// Mean of the squared ISE, the statistic tabulated by the builtin
    /// reference tables.
    pub fn mean_sq(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sum_sq / self.count as f64
        }
    }
}
