//! Internal special-function helpers: modified Bessel functions of the first
//! kind, as ratios `I_k(x)/I_0(x)` and as `ln I_0(x)`.
//!
//! The upward three-term recurrence for `I_k` is unstable (it amplifies the
//! `K_k` solution), so ratios are computed with Miller's downward recurrence:
//! start well above the largest order needed, recurse down with an arbitrary
//! seed, and normalize by the order-zero entry.

/// Ratios `I_k(x)/I_0(x)` for `k = 0..=k_max`, for `x >= 0`.
///
/// For very large `x` (beyond 1e6) the Gaussian limit
/// `I_k(x)/I_0(x) = exp(-k^2/(2x)) (1 + O(k^4/x^3))` is used instead of the
/// recurrence; with `k_max` bounded by a few thousand the neglected terms are
/// below 1e-7 there.
pub(crate) fn bessel_i_ratios(x: f64, k_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; k_max + 1];
    out[0] = 1.0;
    if k_max == 0 || x <= 0.0 {
        return out;
    }
    if x > 1e6 {
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            let kf = k as f64;
            *slot = (-kf * kf / (2.0 * x)).exp();
        }
        return out;
    }

    let base = (k_max as f64).max(x).ceil();
    let start = 2 * (base as usize + (40.0 * base).sqrt() as usize + 2);
    let mut above = 0.0f64; // t_{k+1}
    let mut here = 1e-300f64; // t_k
    for k in (1..=start).rev() {
        let below = above + (2.0 * k as f64 / x) * here;
        above = here;
        here = below;
        // `here` now holds t_{k-1}; higher slots were stored on earlier passes.
        if k - 1 <= k_max {
            out[k - 1] = here;
        }
        if here > 1e250 {
            above /= 1e250;
            here /= 1e250;
            for slot in out.iter_mut().skip(k.saturating_sub(1)) {
                *slot /= 1e250;
            }
        }
    }
    let norm = out[0];
    for slot in out.iter_mut() {
        *slot /= norm;
    }
    out[0] = 1.0;
    out
}

/// Natural log of `I_0(x)` for `x >= 0`: the power series up to `x = 500`,
/// the large-argument expansion beyond.
pub(crate) fn log_bessel_i0(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x <= 500.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        for j in 1..1000 {
            let jf = j as f64;
            term *= q / (jf * jf);
            sum += term;
            if term < sum * 1e-18 {
                break;
            }
        }
        sum.ln()
    } else {
        let r = 1.0 / (8.0 * x);
        let correction = r * (1.0 + r * (4.5 + r * (37.5 + r * 459.375)));
        x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + correction.ln_1p()
    }
}
