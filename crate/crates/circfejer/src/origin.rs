//! Data-driven choice of the CDF origin.
//!
//! A circular CDF needs a starting point. The criterion minimized here is
//! the integral of `F_n(t) (1 - F_n(t))` over one period, where `F_n` is
//! the empirical CDF measured from the candidate origin: it is smallest
//! when the origin sits where the data are sparsest, which is also where
//! the pointwise variance of the estimated CDF is smallest.

use crate::error::{Error, Result};
use crate::estimators::{reduce_angle, AngleSample};
use crate::kernelmath::TWO_PI;

/// Relative tolerance under which two criterion values count as tied.
const TIE_REL_TOL: f64 = 1e-9;

/// The selected origin together with the criterion landscape.
#[derive(Debug, Clone)]
pub struct OriginResult {
    /// Chosen origin, in `[-pi, pi)`.
    pub theta0: f64,
    /// Criterion value at the chosen origin.
    pub criterion_min: f64,
    /// Largest criterion value over all data gaps.
    pub criterion_max: f64,
    /// The data gap containing the chosen origin, as `(left, right)` with
    /// `left` an observed angle and `right = left + width` (the right end
    /// may exceed `pi` when the gap wraps).
    pub arc: (f64, f64),
}

/// The empirical criterion `int F_n(t) (1 - F_n(t)) dt` for the CDF
/// measured from `theta0`.
///
/// Observations are ordered along the arc starting at `theta0`; between
/// consecutive order statistics the empirical CDF is the cumulative weight
/// fraction `p`, contributing `p (1 - p)` times the gap width. Gap widths
/// are computed from the raw angles, so the value is exactly constant (to
/// the bit) while `theta0` moves between two adjacent observations.
pub fn criterion(sample: &AngleSample, theta0: f64) -> Result<f64> {
    if !theta0.is_finite() {
        return Err(Error::InvalidParameter("origin must be finite"));
    }
    let angles = sample.angles();
    let residues: Vec<f64> = angles
        .iter()
        .map(|&x| (x - theta0).rem_euclid(TWO_PI))
        .collect();
    let mut order: Vec<usize> = (0..angles.len()).collect();
    order.sort_by(|&i, &j| residues[i].total_cmp(&residues[j]));
    let total = sample.total_weight();
    let mut cumulative = 0.0;
    let mut acc = 0.0;
    for pair in order.windows(2) {
        cumulative += sample.weight(pair[0]);
        let p = cumulative / total;
        let gap = (angles[pair[1]] - angles[pair[0]]).rem_euclid(TWO_PI);
        acc += p * (1.0 - p) * gap;
    }
    Ok(acc)
}

/// Choose the origin minimizing [`criterion`].
///
/// The criterion is piecewise constant between adjacent observations, so
/// one evaluation at the midpoint of every nonempty data gap (including the
/// wrap-around gap) covers its entire range. Ties within a relative `1e-9`
/// go to the widest gap, then to the gap encountered first scanning upward
/// from `-pi`.
pub fn select_origin(sample: &AngleSample) -> Result<OriginResult> {
    let mut sorted = sample.angles().to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();

    let mut best: Option<(f64, f64, f64, (f64, f64))> = None; // (c, width, theta0, arc)
    let mut c_max = f64::NEG_INFINITY;
    for i in 0..n {
        let left = sorted[i];
        let right = if i + 1 < n {
            sorted[i + 1]
        } else {
            sorted[0] + TWO_PI
        };
        let width = right - left;
        if width <= 0.0 {
            continue; // duplicate observations leave no room for an origin
        }
        let theta0 = reduce_angle(left + width / 2.0);
        let c = criterion(sample, theta0)?;
        c_max = c_max.max(c);
        let better = match &best {
            None => true,
            Some((c_best, w_best, _, _)) => {
                let tol = TIE_REL_TOL * c_best.abs().max(c.abs()).max(f64::MIN_POSITIVE);
                if c < c_best - tol {
                    true
                } else {
                    (c - c_best).abs() <= tol && width > w_best + 1e-12
                }
            }
        };
        if better {
            best = Some((c, width, theta0, (left, right)));
        }
    }
    let (criterion_min, _, theta0, arc) =
        best.expect("a nonempty sample always has a wrap-around gap");
    Ok(OriginResult {
        theta0,
        criterion_min,
        criterion_max: c_max,
        arc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simdist::{mixture, CircularModel, RngStream};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn circular_distance(a: f64, b: f64) -> f64 {
        reduce_angle(a - b)
            .abs()
            .min(TWO_PI - reduce_angle(a - b).abs())
    }

    #[test]
    fn two_symmetric_points_give_origin_zero() {
        let sample = AngleSample::new(vec![-PI / 2.0, PI / 2.0]).unwrap();
        let result = select_origin(&sample).unwrap();
        assert_eq!(result.theta0, 0.0);
        // Both gaps have width pi and equal criterion pi/4.
        assert_abs_diff_eq!(result.criterion_min, PI / 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(result.criterion_max, PI / 4.0, epsilon = 1e-14);
    }

    #[test]
    fn criterion_is_exactly_constant_within_a_gap() {
        let model = CircularModel::VonMises {
            mu: 1.0,
            kappa: 1.5,
        };
        let mut rng = RngStream::new(3, 0);
        let sample = model.sample(20, &mut rng).unwrap();
        let mut sorted = sample.angles().to_vec();
        sorted.sort_by(f64::total_cmp);
        let (left, right) = (sorted[7], sorted[8]);
        let reference = criterion(&sample, left + 0.25 * (right - left)).unwrap();
        for frac in [0.1, 0.5, 0.9, 0.999] {
            let c = criterion(&sample, left + frac * (right - left)).unwrap();
            assert_eq!(c, reference, "criterion moved within a data gap");
        }
    }

    #[test]
    fn criterion_stays_within_theoretical_bounds() {
        for seed in 0..5 {
            let mut rng = RngStream::new(40 + seed, 0);
            let sample = CircularModel::Uniform.sample(30, &mut rng).unwrap();
            for &t0 in &[-3.0, -1.0, 0.0, 2.0] {
                let c = criterion(&sample, t0).unwrap();
                assert!((0.0..=PI / 2.0).contains(&c), "criterion {c} out of range");
            }
        }
    }

    #[test]
    fn selection_is_rotation_equivariant() {
        let model = CircularModel::VonMises {
            mu: 0.3,
            kappa: 2.0,
        };
        let mut rng = RngStream::new(9, 0);
        let base = model.sample(50, &mut rng).unwrap();
        let shift = 0.7;
        let shifted = AngleSample::new(
            base.angles()
                .iter()
                .map(|&x| reduce_angle(x + shift))
                .collect(),
        )
        .unwrap();
        let a = select_origin(&base).unwrap();
        let b = select_origin(&shifted).unwrap();
        assert!(circular_distance(b.theta0, a.theta0 + shift) < 1e-9);
        assert_abs_diff_eq!(a.criterion_min, b.criterion_min, epsilon = 1e-12);
    }

    #[test]
    fn weighted_sample_matches_repeated_observations() {
        let weighted =
            AngleSample::with_weights(vec![0.2, 1.4, -0.7, 2.8], vec![2.0, 1.0, 3.0, 1.0]).unwrap();
        let repeated = AngleSample::new(vec![0.2, 0.2, 1.4, -0.7, -0.7, -0.7, 2.8]).unwrap();
        for &t0 in &[-2.0, 0.0, 1.0, 3.0] {
            assert_abs_diff_eq!(
                criterion(&weighted, t0).unwrap(),
                criterion(&repeated, t0).unwrap(),
                epsilon = 1e-14
            );
        }
        let a = select_origin(&weighted).unwrap();
        let b = select_origin(&repeated).unwrap();
        assert_eq!(a.theta0, b.theta0);
    }

    #[test]
    fn single_observation_gets_the_antipode() {
        let sample = AngleSample::new(vec![0.4]).unwrap();
        let result = select_origin(&sample).unwrap();
        assert_abs_diff_eq!(result.theta0, reduce_angle(0.4 + PI), epsilon = 1e-15);
        assert_eq!(result.criterion_min, 0.0);
    }

    #[test]
    fn duplicate_heavy_sample_is_handled() {
        // Grouped data: twelve distinct angles, many ties in weight space.
        let angles: Vec<f64> = (0..12)
            .map(|j| -PI + (2.0 * j as f64 + 1.0) * PI / 12.0)
            .collect();
        let weights = vec![
            100.0, 103.0, 229.0, 414.0, 676.0, 1248.0, 1458.0, 1365.0, 924.0, 378.0, 199.0, 143.0,
        ];
        let sample = AngleSample::with_weights(angles, weights).unwrap();
        let result = select_origin(&sample).unwrap();
        assert!(result.theta0.is_finite());
        assert!(result.criterion_min < result.criterion_max);
        // Mass peaks just past pi/12*... mid-summer; the sparse region is
        // near the opposite side of the circle.
        assert!(result.theta0.abs() > 2.0, "origin {}", result.theta0);
    }

    #[test]
    fn large_sample_finds_the_theoretical_origin() {
        let model = CircularModel::VonMises {
            mu: 0.0,
            kappa: 2.0,
        };
        let mut rng = RngStream::new(17, 0);
        let sample = model.sample(2000, &mut rng).unwrap();
        let result = select_origin(&sample).unwrap();
        assert!(
            PI - result.theta0.abs() < 0.15,
            "origin {} not near the antimode",
            result.theta0
        );
    }

    #[test]
    fn seeded_moderate_sample_landscape() {
        let model = CircularModel::VonMises {
            mu: PI / 2.0,
            kappa: 2.0,
        };
        let mut rng = RngStream::new(200, 0);
        let sample = model.sample(200, &mut rng).unwrap();
        let result = select_origin(&sample).unwrap();
        assert!(
            circular_distance(result.theta0, -PI / 2.0) < 0.6,
            "origin {}",
            result.theta0
        );
        assert!(
            result.criterion_min > 0.25 && result.criterion_min < 0.75,
            "min {}",
            result.criterion_min
        );
        assert!(
            result.criterion_max > 1.1 && result.criterion_max < PI / 2.0,
            "max {}",
            result.criterion_max
        );
    }

    #[test]
    fn antipodal_mixture_has_two_symmetric_minima() {
        // Equal-weight antipodal von Mises mixture: the criterion has two
        // near-equal minima around +-pi/2; either is a legitimate origin.
        let model = mixture(
            CircularModel::VonMises {
                mu: 0.0,
                kappa: 5.0,
            },
            CircularModel::VonMises { mu: PI, kappa: 5.0 },
            0.5,
        );
        let mut rng = RngStream::new(55, 0);
        let sample = model.sample(2000, &mut rng).unwrap();
        let result = select_origin(&sample).unwrap();
        assert!(
            (result.theta0.abs() - PI / 2.0).abs() < 0.3,
            "origin {}",
            result.theta0
        );
    }
}
