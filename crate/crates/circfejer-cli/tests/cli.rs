//! End-to-end tests of the command-line interface: exit codes, output
//! format, unit handling, and the documented example behaviors.

use std::f64::consts::PI;
use std::io::Write as _;
use std::path::Path;
use std::process::{Command, Stdio};

use circfejer::simdist::{CircularModel, RngStream};

const BIN: &str = env!("CARGO_BIN_EXE_circfejer");

struct Output {
    stdout: String,
    stderr: String,
    code: i32,
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    Output {
        stdout: String::from_utf8(out.stdout).expect("utf8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf8 stderr"),
        code: out.status.code().expect("exit code"),
    }
}

fn run_tmp(args: &[&str]) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = run_in(dir.path(), args);
    (out, dir)
}

fn write_file(dir: &Path, name: &str, content: &str) {
    std::fs::write(dir.join(name), content).expect("write data file");
}

/// Data rows of an estimate dump, as `(theta, value)` pairs.
fn data_rows(stdout: &str) -> Vec<(f64, f64)> {
    stdout
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (t, v) = l.split_once(',').expect("two columns");
            (t.parse().expect("theta"), v.parse().expect("value"))
        })
        .collect()
}

/// Header metadata value for `# key: ...`.
fn header_value<'a>(stdout: &'a str, key: &str) -> Option<&'a str> {
    let prefix = format!("# {key}: ");
    stdout.lines().find_map(|l| l.strip_prefix(prefix.as_str()))
}

#[test]
fn single_observation_density_shows_the_kernel_peak() {
    let dir = tempfile::tempdir().unwrap();
    write_file(dir.path(), "one.csv", "0.0\n");
    let out = run_in(
        dir.path(),
        &["density", "one.csv", "--m", "10", "--grid", "4"],
    );
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let rows = data_rows(&out.stdout);
    assert_eq!(rows.len(), 4);
    let at_zero = rows.iter().find(|(t, _)| *t == 0.0).expect("theta = 0 row");
    assert!(
        (at_zero.1 - 1.750704).abs() < 1e-6,
        "peak value {}",
        at_zero.1
    );
}

#[test]
fn empty_input_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    write_file(dir.path(), "empty.csv", "");
    let out = run_in(dir.path(), &["density", "empty.csv"]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("no observations"), "{}", out.stderr);
}

#[test]
fn missing_file_is_a_parse_error() {
    let (out, _dir) = run_tmp(&["density", "no-such-file.csv"]);
    assert_eq!(out.code, 1);
}

#[test]
fn infeasible_deconvolution_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    write_file(dir.path(), "data.csv", "0.1\n1.2\n-0.4\n");
    // The uniform error's coefficient vanishes exactly at frequency 12.
    let out = run_in(
        dir.path(),
        &[
            "density",
            "data.csv",
            "--classical",
            "uniform:pi/12",
            "--m",
            "12",
        ],
    );
    assert_eq!(out.code, 2, "stderr: {}", out.stderr);
    assert!(out.stderr.contains("infeasible"), "{}", out.stderr);
    // One frequency lower the same model deconvolves fine.
    let ok = run_in(
        dir.path(),
        &[
            "density",
            "data.csv",
            "--classical",
            "uniform:pi/12",
            "--m",
            "11",
        ],
    );
    assert_eq!(ok.code, 0, "stderr: {}", ok.stderr);
}

#[test]
fn auto_origin_needs_at_least_two_observations() {
    let dir = tempfile::tempdir().unwrap();
    write_file(dir.path(), "one.csv", "0.5\n");
    let out = run_in(dir.path(), &["cdf", "one.csv", "--origin", "auto"]);
    assert_eq!(out.code, 3, "stderr: {}", out.stderr);
}

#[test]
fn unknown_table_is_a_parse_error() {
    let (out, _dir) = run_tmp(&["reproduce", "--table", "t99"]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("unknown table"), "{}", out.stderr);
}

#[test]
fn help_and_version_exit_cleanly() {
    let (help, _d1) = run_tmp(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("density"));
    let (version, _d2) = run_tmp(&["--version"]);
    assert_eq!(version.code, 0);
}

#[test]
fn degrees_and_radians_give_identical_output() {
    let dir_deg = tempfile::tempdir().unwrap();
    let dir_rad = tempfile::tempdir().unwrap();
    // Same file name in both directories so the echoed header matches too.
    write_file(dir_deg.path(), "data.csv", "90\n30\n270\n180\n45\n");
    write_file(dir_rad.path(), "data.csv", "pi/2\npi/6\n-pi/2\npi\npi/4\n");
    let deg = run_in(
        dir_deg.path(),
        &[
            "density",
            "data.csv",
            "--degrees",
            "--m",
            "7",
            "--grid",
            "32",
        ],
    );
    let rad = run_in(
        dir_rad.path(),
        &["density", "data.csv", "--m", "7", "--grid", "32"],
    );
    assert_eq!(deg.code, 0);
    assert_eq!(deg.stdout, rad.stdout, "degree conversion must be exact");
}

#[test]
fn phase_shift_rotates_the_sample() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    write_file(dir_a.path(), "data.csv", "0.9\n-0.3\n2.2\n");
    write_file(dir_b.path(), "data.csv", "1.4\n0.2\n2.7\n");
    // Subtracting 0.5 from the second file recovers the first sample.
    let plain = run_in(
        dir_a.path(),
        &["density", "data.csv", "--m", "5", "--grid", "16"],
    );
    let shifted = run_in(
        dir_b.path(),
        &[
            "density",
            "data.csv",
            "--phase-shift",
            "0.5",
            "--m",
            "5",
            "--grid",
            "16",
        ],
    );
    assert_eq!(plain.code, 0);
    assert_eq!(plain.stdout, shifted.stdout);
}

#[test]
fn stdin_matches_file_input() {
    let dir = tempfile::tempdir().unwrap();
    write_file(dir.path(), "data.csv", "0.4\n-1.0\n");
    let from_file = run_in(
        dir.path(),
        &["density", "data.csv", "--m", "4", "--grid", "8"],
    );
    let mut child = Command::new(BIN)
        .args(["density", "-", "--m", "4", "--grid", "8"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .expect("spawn");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"0.4\n-1.0\n")
        .unwrap();
    let piped = child.wait_with_output().expect("stdin run");
    assert!(piped.status.success());
    let stdout = String::from_utf8(piped.stdout).unwrap();
    assert_eq!(data_rows(&stdout), data_rows(&from_file.stdout));
}

#[test]
fn fixed_origin_cdf_spans_zero_to_one() {
    let dir = tempfile::tempdir().unwrap();
    write_file(dir.path(), "two.csv", "-pi/2\npi/2\n");
    let out = run_in(
        dir.path(),
        &[
            "cdf",
            "two.csv",
            "--origin",
            "fixed:-pi",
            "--m",
            "3",
            "--grid",
            "8",
        ],
    );
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let rows = data_rows(&out.stdout);
    assert_eq!(rows.len(), 9, "inclusive grid has grid+1 rows");
    assert_eq!(rows[0].0, -PI);
    assert_eq!(rows[0].1, 0.0, "CDF starts at zero");
    let last = rows.last().unwrap();
    assert_eq!(last.0, PI);
    assert!(
        (last.1 - 1.0).abs() < 1e-12,
        "CDF ends at one, got {}",
        last.1
    );
    for pair in rows.windows(2) {
        assert!(pair[1].1 >= pair[0].1 - 1e-13, "monotone");
    }
}

#[test]
fn auto_origin_reports_the_criterion_range() {
    // A sample from a unimodal model concentrated at pi/2; the published
    // criterion range for this configuration is about [0.48, 1.38].
    let model = CircularModel::VonMises {
        mu: PI / 2.0,
        kappa: 2.0,
    };
    let mut rng = RngStream::new(20240801, 0);
    let sample = model.sample(200, &mut rng).unwrap();
    let mut text = String::new();
    for &x in sample.angles() {
        text.push_str(&format!("{x}\n"));
    }
    let dir = tempfile::tempdir().unwrap();
    write_file(dir.path(), "vm.csv", &text);
    let out = run_in(
        dir.path(),
        &["cdf", "vm.csv", "--origin", "auto", "--grid", "8"],
    );
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let c_min: f64 = header_value(&out.stdout, "criterion_min")
        .expect("criterion_min header")
        .parse()
        .unwrap();
    let c_max: f64 = header_value(&out.stdout, "criterion_max")
        .expect("criterion_max header")
        .parse()
        .unwrap();
    assert!((c_min - 0.48).abs() <= 0.1, "criterion min {c_min}");
    assert!((c_max - 1.38).abs() <= 0.1, "criterion max {c_max}");
    // The selected origin sits opposite the mode, in the sparse region.
    let origin: f64 = header_value(&out.stdout, "origin")
        .unwrap()
        .parse()
        .unwrap();
    assert!(
        (origin + PI / 2.0).abs() < 0.6,
        "origin {origin} should fall near the antimode -pi/2"
    );
}

#[test]
fn exported_grid_re_reads_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    write_file(dir.path(), "data.csv", "0.3\n-2.0\n1.1\n2.9\n");
    let out = run_in(
        dir.path(),
        &[
            "density", "data.csv", "--m", "9", "--grid", "64", "--output", "est.csv",
        ],
    );
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let exported = std::fs::read_to_string(dir.path().join("est.csv")).unwrap();
    // Parsing every printed float and re-rendering it in the same format
    // must reproduce the file byte for byte: 17 significant digits round-trip.
    let mut rebuilt = String::new();
    for line in exported.lines() {
        if line.starts_with('#') {
            rebuilt.push_str(line);
        } else {
            let (t, v) = line.split_once(',').unwrap();
            let theta: f64 = t.parse().unwrap();
            let value: f64 = v.parse().unwrap();
            rebuilt.push_str(&format!("{theta:.16e},{value:.16e}"));
        }
        rebuilt.push('\n');
    }
    assert_eq!(exported, rebuilt);
}

#[test]
fn rainfall_noise_correction_removes_spurious_modes() {
    let (plain, _d1) = run_tmp(&[
        "density",
        "rainfall",
        "--m",
        "opt-parametric",
        "--grid",
        "256",
    ]);
    let (corrected, _d2) = run_tmp(&[
        "density",
        "rainfall",
        "--berkson",
        "uniform:pi/12",
        "--m",
        "opt-parametric",
        "--grid",
        "256",
    ]);
    assert_eq!(plain.code, 0, "stderr: {}", plain.stderr);
    assert_eq!(corrected.code, 0, "stderr: {}", corrected.stderr);
    let count_modes = |stdout: &str| -> usize {
        let values: Vec<f64> = data_rows(stdout).iter().map(|(_, v)| *v).collect();
        let g = values.len();
        (0..g)
            .filter(|&i| {
                let prev = values[(i + g - 1) % g];
                let next = values[(i + 1) % g];
                values[i] > prev && values[i] > next
            })
            .count()
    };
    let modes_plain = count_modes(&plain.stdout);
    let modes_corrected = count_modes(&corrected.stdout);
    assert!(
        modes_corrected <= modes_plain,
        "correction should not add modes: {modes_corrected} vs {modes_plain}"
    );
    assert!(modes_corrected >= 1);
    // The dominant mode stays in the summer months (July centers at pi/12).
    let rows = data_rows(&corrected.stdout);
    let peak = rows.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
    assert!(
        (-0.4..0.9).contains(&peak),
        "summer peak expected, mode at {peak}"
    );
}

#[test]
fn reproduce_writes_deterministic_tables() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let out = run_in(
            dir.path(),
            &["reproduce", "--table", "t1", "--n-reps", "8", "--seed", "7"],
        );
        assert_eq!(out.code, 0, "stderr: {}", out.stderr);
        assert!(out.stdout.contains("t1.csv"));
    }
    let a = std::fs::read(dir_a.path().join("t1.csv")).unwrap();
    let b = std::fs::read(dir_b.path().join("t1.csv")).unwrap();
    assert_eq!(a, b, "same seed must give identical bytes");
    assert!(!a.is_empty());
}

#[test]
fn seed_environment_variable_sets_the_default() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["reproduce", "--table", "appendix-b", "--n-reps", "1"])
        .env("CIRCFEJER_SEED", "4242")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("appendix-b.csv")).unwrap();
    assert!(csv.contains("# master_seed: 4242"), "{csv}");
}
