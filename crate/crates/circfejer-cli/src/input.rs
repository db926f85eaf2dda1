//! Argument and data-file parsing: angle expressions, order rules, error
//! models, observation files, and the embedded rainfall data.

use std::f64::consts::PI;
use std::io::Read;

use circfejer::deconv::ErrorModel;
use circfejer::estimators::{reduce_angle, AngleSample};

use crate::CliError;

/// Parse an angle expression: a decimal literal, or a multiple of pi such
/// as `pi`, `-pi`, `pi/12`, `3pi/4`, `0.5pi`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if t.is_empty() {
        return Err("empty angle".to_string());
    }
    if let Some(idx) = t.find("pi") {
        let (pre, rest) = t.split_at(idx);
        let rest = rest[2..].trim();
        let coefficient = match pre.trim() {
            "" | "+" => 1.0,
            "-" => -1.0,
            p => p
                .parse::<f64>()
                .map_err(|_| format!("invalid coefficient in angle '{t}'"))?,
        };
        let denominator = if rest.is_empty() {
            1.0
        } else {
            let d = rest
                .strip_prefix('/')
                .ok_or_else(|| format!("invalid angle '{t}': expected pi/<number>"))?
                .trim()
                .parse::<f64>()
                .map_err(|_| format!("invalid denominator in angle '{t}'"))?;
            if d == 0.0 {
                return Err(format!("invalid angle '{t}': division by zero"));
            }
            d
        };
        Ok(coefficient * PI / denominator)
    } else {
        t.parse::<f64>().map_err(|_| format!("invalid angle '{t}'"))
    }
}

/// Order-selection rules nameable on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliMRule {
    Fixed(u32),
    SqrtN,
    /// Density-style plug-in with the von Mises parametric functional.
    OptParametric,
    /// Density-style plug-in with the truncated-series functional.
    OptNonparametric,
    /// The CDF plug-in rule (needs the origin).
    OptCdf,
}

/// Parse `--m`. Density-style commands accept an integer, `sqrt-n`,
/// `opt-parametric`, or `opt-nonparametric`; the CDF command accepts an
/// integer, `sqrt-n`, or `opt`.
pub fn parse_m_rule(s: &str, for_cdf: bool) -> Result<CliMRule, String> {
    let t = s.trim();
    match t {
        "sqrt-n" => return Ok(CliMRule::SqrtN),
        "opt" if for_cdf => return Ok(CliMRule::OptCdf),
        "opt-parametric" if !for_cdf => return Ok(CliMRule::OptParametric),
        "opt-nonparametric" if !for_cdf => return Ok(CliMRule::OptNonparametric),
        _ => {}
    }
    if let Ok(v) = t.parse::<u32>() {
        if v == 0 {
            return Err("order must be at least 1".to_string());
        }
        return Ok(CliMRule::Fixed(v));
    }
    let allowed = if for_cdf {
        "<integer>, sqrt-n, opt"
    } else {
        "<integer>, sqrt-n, opt-parametric, opt-nonparametric"
    };
    Err(format!("invalid order rule '{t}' (expected {allowed})"))
}

/// Parse an error-model argument `kind:parameter`:
/// `uniform:<halfwidth>` (angle expression), `wl:<scale>` (wrapped Laplace,
/// scale = 1/rate), `vm:<kappa>` (von Mises).
pub fn parse_error_model(s: &str) -> Result<ErrorModel, String> {
    let (kind, value) = s.split_once(':').ok_or_else(|| {
        format!("invalid error model '{s}' (expected uniform:pi/12, wl:0.2, or vm:2)")
    })?;
    let v = parse_angle(value)?;
    match kind.trim().to_ascii_lowercase().as_str() {
        "uniform" | "u" => Ok(ErrorModel::WrappedUniform { halfwidth: v }),
        "wl" | "laplace" => {
            if v <= 0.0 || v.is_nan() {
                return Err(format!("wrapped Laplace scale must be positive, got {v}"));
            }
            Ok(ErrorModel::WrappedLaplace { rate: 1.0 / v })
        }
        "vm" | "von-mises" => Ok(ErrorModel::VonMisesError { kappa: v }),
        other => Err(format!(
            "unknown error model '{other}' (expected uniform, wl, or vm)"
        )),
    }
}

/// How the CDF origin is chosen: `auto` or `fixed:<angle>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CliOrigin {
    Auto,
    Fixed(f64),
}

pub fn parse_origin(s: &str) -> Result<CliOrigin, String> {
    let t = s.trim();
    if t == "auto" {
        return Ok(CliOrigin::Auto);
    }
    if let Some(rest) = t.strip_prefix("fixed:") {
        return Ok(CliOrigin::Fixed(parse_angle(rest)?));
    }
    Err(format!(
        "invalid origin '{t}' (expected auto or fixed:<angle>)"
    ))
}

/// Adjusted monthly rainfall frequencies (January through December).
pub const RAINFALL_WEIGHTS: [f64; 12] = [
    100.0, 103.0, 229.0, 414.0, 676.0, 1248.0, 1458.0, 1365.0, 924.0, 378.0, 199.0, 143.0,
];

/// The embedded rainfall data as a weighted circular sample.
///
/// Month `j` (1 = January, ..., 12 = December) sits at the bin center
/// `-pi + (2 j - 1) pi / 12`, so the twelve angles are spaced `pi/6` apart
/// and January's center is at `-11 pi / 12`. This month-to-angle convention
/// is ours; use `--phase-shift` to move the bins (e.g. `--phase-shift
/// -pi/12` places January at `-pi + pi/6`).
pub fn rainfall_sample(phase: f64) -> Result<AngleSample, CliError> {
    let angles: Vec<f64> = (1..=12)
        .map(|j| reduce_angle(-PI + f64::from(2 * j - 1) * PI / 12.0 - phase))
        .collect();
    AngleSample::with_weights(angles, RAINFALL_WEIGHTS.to_vec()).map_err(CliError::from)
}

/// A loaded data set, remembering whether any row carried a weight.
pub struct LoadedSample {
    pub sample: AngleSample,
    pub weighted: bool,
}

/// Read observations from a file, stdin (`-`), or the builtin `rainfall`
/// set. Data rows hold one angle, or `angle,count`; blank lines and lines
/// starting with `#` are skipped. Angles may be plain numbers or pi
/// expressions; `degrees` converts them after parsing; `phase` (radians)
/// is subtracted from every observation.
pub fn load_sample(input: &str, degrees: bool, phase: f64) -> Result<LoadedSample, CliError> {
    if input == "rainfall" {
        if degrees {
            return Err(CliError::parse(
                "--degrees does not apply to the builtin rainfall data",
            ));
        }
        return Ok(LoadedSample {
            sample: rainfall_sample(phase)?,
            weighted: true,
        });
    }
    let text = if input == "-" {
        let mut buffer = String::new();
        std::io::stdin()
            .read_to_string(&mut buffer)
            .map_err(|e| CliError::parse(format!("cannot read stdin: {e}")))?;
        buffer
    } else {
        std::fs::read_to_string(input)
            .map_err(|e| CliError::parse(format!("cannot read {input}: {e}")))?
    };
    parse_observations(&text, degrees, phase)
}

fn parse_observations(text: &str, degrees: bool, phase: f64) -> Result<LoadedSample, CliError> {
    let mut angles = Vec::new();
    let mut weights = Vec::new();
    let mut weighted = false;
    for (index, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = index + 1;
        let (angle_text, weight_text) = match line.split_once(',') {
            Some((a, w)) => (a, Some(w)),
            None => (line, None),
        };
        let mut angle =
            parse_angle(angle_text).map_err(|e| CliError::parse(format!("line {lineno}: {e}")))?;
        if degrees {
            angle = angle.to_radians();
        }
        angle = reduce_angle(angle - phase);
        let weight = match weight_text {
            Some(w) => {
                weighted = true;
                let parsed: f64 = w.trim().parse().map_err(|_| {
                    CliError::parse(format!("line {lineno}: invalid count '{}'", w.trim()))
                })?;
                parsed
            }
            None => 1.0,
        };
        angles.push(angle);
        weights.push(weight);
    }
    if angles.is_empty() {
        return Err(CliError::parse("input contains no observations"));
    }
    let sample = if weighted {
        AngleSample::with_weights(angles, weights)?
    } else {
        AngleSample::new(angles)?
    };
    Ok(LoadedSample { sample, weighted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn angle_expressions_parse() {
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("-pi").unwrap(), -PI);
        assert_eq!(parse_angle("pi/12").unwrap(), PI / 12.0);
        assert_eq!(parse_angle("3pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_angle("-2pi/3").unwrap(), -2.0 * PI / 3.0);
        assert_eq!(parse_angle("0.5pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_angle(" 1.25 ").unwrap(), 1.25);
        assert_eq!(parse_angle("-3e-2").unwrap(), -0.03);
        for bad in ["", "pie", "pi/0", "two", "pi/", "1/pi"] {
            assert!(parse_angle(bad).is_err(), "{bad} should not parse");
        }
    }

    #[test]
    fn order_rules_parse_per_command() {
        assert_eq!(parse_m_rule("17", false).unwrap(), CliMRule::Fixed(17));
        assert_eq!(parse_m_rule("sqrt-n", false).unwrap(), CliMRule::SqrtN);
        assert_eq!(
            parse_m_rule("opt-parametric", false).unwrap(),
            CliMRule::OptParametric
        );
        assert_eq!(
            parse_m_rule("opt-nonparametric", false).unwrap(),
            CliMRule::OptNonparametric
        );
        assert_eq!(parse_m_rule("opt", true).unwrap(), CliMRule::OptCdf);
        assert!(parse_m_rule("opt", false).is_err());
        assert!(parse_m_rule("opt-parametric", true).is_err());
        assert!(parse_m_rule("0", false).is_err());
        assert!(parse_m_rule("-3", false).is_err());
    }

    #[test]
    fn error_models_parse() {
        assert_eq!(
            parse_error_model("uniform:pi/12").unwrap(),
            ErrorModel::WrappedUniform {
                halfwidth: PI / 12.0
            }
        );
        // The wrapped Laplace argument is the scale; rate is its inverse.
        assert_eq!(
            parse_error_model("wl:0.2").unwrap(),
            ErrorModel::WrappedLaplace { rate: 5.0 }
        );
        assert_eq!(
            parse_error_model("vm:2").unwrap(),
            ErrorModel::VonMisesError { kappa: 2.0 }
        );
        for bad in ["uniform", "wl:0", "wl:-1", "gauss:1", "uniform:pie"] {
            assert!(parse_error_model(bad).is_err(), "{bad} should not parse");
        }
    }

    #[test]
    fn origins_parse() {
        assert_eq!(parse_origin("auto").unwrap(), CliOrigin::Auto);
        assert_eq!(parse_origin("fixed:-pi").unwrap(), CliOrigin::Fixed(-PI));
        assert!(parse_origin("fixed").is_err());
        assert!(parse_origin("best").is_err());
    }

    #[test]
    fn observation_files_parse_with_weights_and_comments() {
        let text = "# header\n0.5\n\npi/2,3\n-1.25,0.5\n";
        let loaded = parse_observations(text, false, 0.0).unwrap();
        assert!(loaded.weighted);
        assert_eq!(loaded.sample.len(), 3);
        assert_abs_diff_eq!(loaded.sample.angles()[1], PI / 2.0);
        assert_eq!(loaded.sample.weight(0), 1.0);
        assert_eq!(loaded.sample.weight(1), 3.0);
        assert_eq!(loaded.sample.weight(2), 0.5);

        let unweighted = parse_observations("0.1\n0.2\n", false, 0.0).unwrap();
        assert!(!unweighted.weighted);
        assert!(!unweighted.sample.is_weighted());

        assert!(parse_observations("", false, 0.0).is_err());
        assert!(parse_observations("# only comments\n", false, 0.0).is_err());
        assert!(parse_observations("abc\n", false, 0.0).is_err());
        assert!(parse_observations("0.1,x\n", false, 0.0).is_err());
    }

    #[test]
    fn degrees_and_phase_apply_in_order() {
        let loaded = parse_observations("90\n", true, 0.0).unwrap();
        assert_eq!(loaded.sample.angles()[0], PI / 2.0);
        let shifted = parse_observations("90\n", true, PI / 2.0).unwrap();
        assert_eq!(shifted.sample.angles()[0], 0.0);
    }

    #[test]
    fn rainfall_is_the_published_histogram() {
        let loaded = load_sample("rainfall", false, 0.0).unwrap();
        let sample = loaded.sample;
        assert_eq!(sample.len(), 12);
        assert_abs_diff_eq!(sample.total_weight(), 7237.0);
        // July (j = 7) carries weight 1458 at angle pi/12.
        assert_eq!(sample.weight(6), 1458.0);
        assert_abs_diff_eq!(sample.angles()[6], PI / 12.0, epsilon = 1e-15);
        // January sits at -11 pi / 12; bins are pi/6 apart.
        assert_abs_diff_eq!(sample.angles()[0], -11.0 * PI / 12.0, epsilon = 1e-15);
        for pair in sample.angles().windows(2) {
            assert_abs_diff_eq!(pair[1] - pair[0], PI / 6.0, epsilon = 1e-12);
        }
    }
}
