//! The Fejer kernel on the circle, its antiderivative, and the kernel
//! functionals used by bias expansions and plug-in bandwidth rules.
//!
//! The kernel of order `m` is the nonnegative trigonometric polynomial
//!
//! ```text
//! K_m(s) = (1 / (2 pi (m+1))) * (sin((m+1) s / 2) / sin(s / 2))^2
//!        = 1/(2 pi) + (1/pi) * sum_{k=1}^{m} (1 - k/(m+1)) cos(k s),
//! ```
//!
//! with antiderivative (from `-pi`)
//!
//! ```text
//! W_m(t) = (t + pi)/(2 pi) + (1/pi) * sum_{k=1}^{m} (1 - k/(m+1)) sin(k t)/k.
//! ```
//!
//! [`kernel_moments_exact`] evaluates six functionals of `K_m` in closed form
//! (via harmonic sums); [`kernel_moments_quadrature`] evaluates the same
//! integrals by composite Simpson quadrature and serves as an independent
//! cross-check. [`lambert_w0`] and [`harmonic_sums`] are the small pieces of
//! real analysis the bandwidth rules need.

use crate::error::{Error, Result};
use std::f64::consts::{E, PI};

/// The Euler-Mascheroni constant, rounded to f64.
pub const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;
/// Apery's constant zeta(3), rounded to f64.
pub const ZETA_3: f64 = 1.202_056_903_159_594_3;

pub(crate) const TWO_PI: f64 = 2.0 * PI;

/// Reduce an angle to the half-open interval `[-pi, pi)`; exact odd multiples
/// of `pi` map to `-pi`.
pub(crate) fn reduce_angle(theta: f64) -> f64 {
    let r = (theta + PI).rem_euclid(TWO_PI) - PI;
    // rem_euclid can return exactly 2*pi when the dividend is a tiny negative
    // number, which would map to +pi; fold it back.
    if r >= PI {
        r - TWO_PI
    } else {
        r
    }
}

/// Validated order (polynomial degree) of the Fejer kernel; at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FejerOrder(u32);

impl FejerOrder {
    /// Construct an order; `m = 0` is rejected.
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 {
            Err(Error::InvalidOrder)
        } else {
            Ok(Self(m))
        }
    }

    /// The raw order.
    pub fn get(self) -> u32 {
        self.0
    }

    /// Triangular taper weight `1 - k/(m+1)` applied to frequency `k`;
    /// zero beyond the order.
    pub fn taper(self, k: u32) -> f64 {
        if k > self.0 {
            0.0
        } else {
            1.0 - f64::from(k) / f64::from(self.0 + 1)
        }
    }
}

impl TryFrom<u32> for FejerOrder {
    type Error = Error;

    fn try_from(m: u32) -> Result<Self> {
        Self::new(m)
    }
}

/// Evaluate the Fejer kernel of order `m` at angular lag `s`.
///
/// Uses the closed ratio-of-sines form away from the peak and the cosine
/// series when `|sin(s/2)| < 1e-6` (near `s = 0` modulo `2 pi`), where the
/// ratio loses precision. The kernel is even, `2 pi`-periodic, nonnegative,
/// integrates to one, and peaks at `K_m(0) = (m+1)/(2 pi)`, which is
/// returned in closed form when the reduced lag is exactly zero.
pub fn fejer_kernel(m: FejerOrder, s: f64) -> f64 {
    let y = reduce_angle(s);
    let half_sin = (0.5 * y).sin();
    let mp1 = f64::from(m.get() + 1);
    if y == 0.0 {
        return mp1 / TWO_PI;
    }
    if half_sin.abs() < 1e-6 {
        // Cosine series with a rotation recurrence for cos(k y).
        let (s1, c1) = y.sin_cos();
        let (mut sk, mut ck) = (s1, c1);
        let mut acc = 0.0;
        for k in 1..=m.get() {
            acc += (1.0 - f64::from(k) / mp1) * ck;
            let next_s = sk * c1 + ck * s1;
            let next_c = ck * c1 - sk * s1;
            sk = next_s;
            ck = next_c;
        }
        (0.5 + acc) / PI
    } else {
        let t = (0.5 * mp1 * y).sin() / half_sin;
        t * t / (TWO_PI * mp1)
    }
}

/// The antiderivative of the kernel extended over the whole real line:
/// the series form evaluated at the raw argument, so that
/// `lifted(y + 2 pi) = lifted(y) + 1`. Restricted to `[-pi, pi]` this is the
/// kernel's CDF with `lifted(-pi) = 0` and `lifted(pi) = 1`.
pub(crate) fn integrated_kernel_lifted(m: FejerOrder, y: f64) -> f64 {
    let mp1 = f64::from(m.get() + 1);
    let (s1, c1) = y.sin_cos();
    let (mut sk, mut ck) = (s1, c1);
    let mut acc = 0.0;
    for k in 1..=m.get() {
        let kf = f64::from(k);
        acc += (1.0 - kf / mp1) * sk / kf;
        let next_s = sk * c1 + ck * s1;
        let next_c = ck * c1 - sk * s1;
        sk = next_s;
        ck = next_c;
    }
    (y + PI) / TWO_PI + acc / PI
}

/// Evaluate the integrated kernel `W_m(theta) = int_{-pi}^{theta} K_m`.
///
/// `theta` is expected in `[-pi, pi]`; values outside are reduced modulo
/// `2 pi` into `[-pi, pi)`. The result lies in `[0, 1]`, is nondecreasing in
/// `theta`, and satisfies `W_m(-pi) = 0`, `W_m(0) = 1/2`, `W_m(pi) = 1`.
pub fn integrated_kernel(m: FejerOrder, theta: f64) -> f64 {
    let y = if (-PI..=PI).contains(&theta) {
        theta
    } else {
        reduce_angle(theta)
    };
    integrated_kernel_lifted(m, y).clamp(0.0, 1.0)
}

/// Plain and alternating harmonic sums `sum_{k=1}^{m} 1/k^l` and
/// `sum_{k=1}^{m} (-1)^(k+1)/k^l`, for exponents `l` in `1..=4`.
///
/// Terms are accumulated from `k = m` downward (smallest first) so the
/// result is accurate to roughly `1e-9` even at `m = 10^6`.
pub fn harmonic_sums(m: u64, l: u32) -> Result<(f64, f64)> {
    if !(1..=4).contains(&l) {
        return Err(Error::InvalidExponent(l));
    }
    if m == 0 {
        return Err(Error::EmptyHarmonicRange);
    }
    let mut plain = 0.0;
    let mut alternating = 0.0;
    for k in (1..=m).rev() {
        let term = 1.0 / (k as f64).powi(l as i32);
        plain += term;
        if k % 2 == 1 {
            alternating += term;
        } else {
            alternating -= term;
        }
    }
    Ok((plain, alternating))
}

/// Six functionals of the Fejer kernel over one period.
///
/// With `W_m` the integrated kernel and all integrals over `[-pi, pi]`:
///
/// | field    | integral                    |
/// |----------|-----------------------------|
/// | `alpha`  | `int K_m(y)^2 dy`           |
/// | `beta`   | `int y^2 K_m(y) dy`         |
/// | `gamma3` | `int |y|^3 K_m(y) dy`       |
/// | `m4`     | `int y^4 K_m(y) dy`         |
/// | `nu1`    | `2 pi int y W_m(y) K_m(y) dy` |
/// | `nu3`    | `int y^3 W_m(y) K_m(y) dy`  |
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelMoments {
    pub alpha: f64,
    pub beta: f64,
    pub gamma3: f64,
    pub m4: f64,
    pub nu1: f64,
    pub nu3: f64,
}

/// Closed-form kernel moments via harmonic sums.
///
/// Cost is `O(m)` for everything except the cross-frequency component of
/// `nu3`, which is an `O(m^2)` pair sum.
pub fn kernel_moments_exact(m: FejerOrder) -> KernelMoments {
    let mf = f64::from(m.get());
    let mp1 = mf + 1.0;
    let mm = u64::from(m.get());
    // Exponent range is fixed and m >= 1, so these cannot fail.
    let (h1, hb1) = harmonic_sums(mm, 1).expect("valid harmonic sum");
    let (h2, hb2) = harmonic_sums(mm, 2).expect("valid harmonic sum");
    let (h3, hb3) = harmonic_sums(mm, 3).expect("valid harmonic sum");
    let (h4, hb4) = harmonic_sums(mm, 4).expect("valid harmonic sum");

    let alpha = 1.0 / TWO_PI + mf * (2.0 * mf + 1.0) / (6.0 * PI * mp1);
    let beta = PI * PI / 3.0 - 4.0 * hb2 + 4.0 * hb1 / mp1;
    // Recurring taper-weighted combinations.
    let d2 = hb2 - hb1 / mp1;
    let d4 = hb4 - hb3 / mp1;
    let gamma3 = PI.powi(3) / 4.0 + (6.0 / PI) * (-PI * PI * d2 + 2.0 * d4 + 2.0 * (h4 - h3 / mp1));
    let m4 = PI.powi(4) / 5.0 - 8.0 * PI * PI * d2 + 48.0 * d4;
    let nu1 = PI * PI / 3.0 - 2.0 * hb2 + 2.0 * hb1 / mp1 - h2 + 2.0 * h1 / mp1 - mf / (mp1 * mp1);
    let (s1, s2) = nu3_component_sums(m);
    let nu3 = PI.powi(3) / 10.0 + (3.0 / PI) * (-PI * PI * d2 + 6.0 * d4) + s1 + s2;

    KernelMoments {
        alpha,
        beta,
        gamma3,
        m4,
        nu1,
        nu3,
    }
}

/// The two lattice sums entering `nu3`: the single-frequency component
///
/// ```text
/// S1 = (1/(4 pi)) sum_{k=1}^{m} (1 - k/(m+1))^2 (3 - 2 k^2 pi^2) / k^4
/// ```
///
/// and the cross-frequency component over unordered frequency pairs
///
/// ```text
/// S2 = -(24/pi) sum_{1 <= k < l <= m} (-1)^(k+l)
///        (1 - (k+l)/(m+1) + k l/(m+1)^2) / ((l-k)^2 (l+k)^2).
/// ```
pub fn nu3_component_sums(m: FejerOrder) -> (f64, f64) {
    let mp1 = f64::from(m.get() + 1);
    let mut s1 = 0.0;
    for k in (1..=m.get()).rev() {
        let kf = f64::from(k);
        let g = 1.0 - kf / mp1;
        s1 += g * g * (3.0 - 2.0 * kf * kf * PI * PI) / kf.powi(4);
    }
    s1 /= 4.0 * PI;

    let mut s2 = 0.0;
    for k in 1..m.get() {
        for l in (k + 1)..=m.get() {
            let kf = f64::from(k);
            let lf = f64::from(l);
            let sign = if (k + l) % 2 == 0 { 1.0 } else { -1.0 };
            let w = 1.0 - (kf + lf) / mp1 + kf * lf / (mp1 * mp1);
            let diff = lf - kf;
            let sum = lf + kf;
            s2 += sign * w / (diff * diff * sum * sum);
        }
    }
    s2 *= -24.0 / PI;

    (s1, s2)
}

/// The slowly-converging parts of `nu3`, rescaled to expose their limits:
/// returns
///
/// ```text
/// ( m (S1 + 3 pi^3/40 - pi ln m/(m+1)),
///   m (S2 -   pi^3/20 + pi ln m/(m+1)),
///   m (S1 + S2 + pi^3/40) )
/// ```
///
/// where the third column is the sum of the first two.
pub fn nu3_cross_term_columns(m: FejerOrder) -> (f64, f64, f64) {
    let (s1, s2) = nu3_component_sums(m);
    let mf = f64::from(m.get());
    let mp1 = mf + 1.0;
    let log_term = PI * mf.ln() / mp1;
    let pi3 = PI.powi(3);
    let col1 = mf * (s1 + 3.0 * pi3 / 40.0 - log_term);
    let col2 = mf * (s2 - pi3 / 20.0 + log_term);
    let col3 = mf * (s1 + s2 + pi3 / 40.0);
    (col1, col2, col3)
}

/// Kernel moments by composite Simpson quadrature over `[-pi, pi]`.
///
/// `points_per_period` is the number of Simpson panels; at least `64 (m+1)`
/// panels are required so the oscillations of `K_m` are resolved. All six
/// integrands are accumulated in a single pass.
pub fn kernel_moments_quadrature(m: FejerOrder, points_per_period: usize) -> Result<KernelMoments> {
    let required = 64 * (m.get() as usize + 1);
    if points_per_period < required {
        return Err(Error::InsufficientResolution {
            m: m.get(),
            required,
            got: points_per_period,
        });
    }
    let panels = points_per_period + points_per_period % 2;
    let h = TWO_PI / panels as f64;

    let mut acc = [0.0f64; 6];
    for i in 0..=panels {
        let y = -PI + h * i as f64;
        let simpson_w = if i == 0 || i == panels {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let k = fejer_kernel(m, y);
        let w = integrated_kernel_lifted(m, y);
        let y2 = y * y;
        acc[0] += simpson_w * k * k;
        acc[1] += simpson_w * y2 * k;
        acc[2] += simpson_w * y2 * y.abs() * k;
        acc[3] += simpson_w * y2 * y2 * k;
        acc[4] += simpson_w * y * w * k;
        acc[5] += simpson_w * y2 * y * w * k;
    }
    let scale = h / 3.0;
    Ok(KernelMoments {
        alpha: acc[0] * scale,
        beta: acc[1] * scale,
        gamma3: acc[2] * scale,
        m4: acc[3] * scale,
        nu1: TWO_PI * acc[4] * scale,
        nu3: acc[5] * scale,
    })
}

/// Principal branch of the Lambert W function: the solution `w >= -1` of
/// `w e^w = z`, defined for `z >= -1/e`.
///
/// Uses a branch-appropriate initial guess and Halley iteration; the result
/// satisfies `|w e^w - z| <= 1e-12 * max(1, |z|)`.
pub fn lambert_w0(z: f64) -> Result<f64> {
    let lower = -(-1.0f64).exp();
    if z < lower - 1e-15 || z.is_nan() {
        return Err(Error::LambertDomain { z });
    }
    if z <= lower {
        return Ok(-1.0);
    }
    if z == 0.0 {
        return Ok(0.0);
    }

    let mut w = if z > E {
        let l = z.ln();
        l - l.ln()
    } else if z >= 0.0 {
        z.ln_1p()
    } else {
        // Branch-point expansion in p = sqrt(2 (e z + 1)).
        let p = (2.0 * (E * z + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 * p * p * p / 72.0
    };

    let tol = 1e-13 * z.abs().max(1.0);
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - z;
        if f.abs() <= tol {
            break;
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if !denom.is_finite() || denom == 0.0 {
            break;
        }
        w -= f / denom;
        if w < -1.0 {
            w = -1.0 + 1e-14;
        }
    }
    Ok(w)
}

/// Composite Simpson quadrature of `f` over `[a, b]` with an even number of
/// panels (`panels` is rounded up to even, minimum 2).
pub(crate) fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = {
        let p = panels.max(2);
        p + p % 2
    };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}
