//! Command-line interface for circular density and CDF estimation with
//! Fejer-tapered trigonometric series: plug-in order selection, Berkson and
//! classical measurement-error correction, data-driven CDF origin, and
//! reproduction of the simulation tables.

mod input;

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use circfejer::bandwidth::{
    effective_n, m_opt_cdf, m_opt_classical_wl, m_opt_density, theta1_nonparametric,
    theta1_parametric_vm, Theta1Estimate, Theta1Method,
};
use circfejer::deconv::{
    berkson_estimate, classical_estimate, clip_and_renormalize, negative_mass, ErrorModel,
};
use circfejer::estimators::{
    cdf_estimate, density_estimate, reduce_angle, uniform_grid, AngleSample, EstimateGrid,
};
use circfejer::harness::{run_table, TableId};
use circfejer::kernelmath::FejerOrder;
use circfejer::origin::select_origin;

use crate::input::{
    load_sample, parse_angle, parse_error_model, parse_m_rule, parse_origin, CliMRule, CliOrigin,
};

/// Environment variable supplying the default master seed for `reproduce`.
const SEED_ENV: &str = "CIRCFEJER_SEED";
/// Master seed used when neither `--seed` nor the environment provides one.
const DEFAULT_SEED: u64 = 20240801;

/// An error carrying the process exit code: 1 for parse/usage problems,
/// 2 for infeasible deconvolution, 3 for degenerate samples.
#[derive(Debug)]
pub struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    pub fn parse(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 1,
        }
    }

    pub fn degenerate(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 3,
        }
    }
}

impl From<circfejer::Error> for CliError {
    fn from(e: circfejer::Error) -> Self {
        let code = match &e {
            circfejer::Error::VanishingCoefficient { .. } => 2,
            circfejer::Error::DegenerateSample { .. }
            | circfejer::Error::TooFewObservations { .. } => 3,
            _ => 1,
        };
        Self {
            message: e.to_string(),
            code,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "circfejer",
    version,
    about = "Nonparametric density and CDF estimation for circular data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a circular density (optionally correcting measurement error)
    Density(DensityArgs),
    /// Estimate a circular CDF from a fixed or data-driven origin
    Cdf(CdfArgs),
    /// Re-run the simulation studies and write their tables as CSV
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Data file (one angle per line, or `angle,count`), `-` for stdin,
    /// or `rainfall` for the builtin monthly rainfall histogram
    input: String,
    /// Interpret input angles as degrees
    #[arg(long)]
    degrees: bool,
    /// Angle subtracted from every observation after loading (accepts pi
    /// expressions, e.g. `pi/12`)
    #[arg(
        long,
        default_value = "0",
        value_name = "ANGLE",
        allow_hyphen_values = true
    )]
    phase_shift: String,
}

#[derive(Args)]
struct DensityArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Series order: an integer, `sqrt-n`, `opt-parametric`, or
    /// `opt-nonparametric`
    #[arg(long, default_value = "opt-parametric")]
    m: String,
    /// Number of evaluation points on [-pi, pi)
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Treat observations as true values to which noise WILL be added
    /// (target the noisy distribution); `uniform:<halfwidth>`, `wl:<scale>`,
    /// or `vm:<kappa>`
    #[arg(long, value_name = "ERROR", conflicts_with = "classical")]
    berkson: Option<String>,
    /// Treat observations as noisy measurements and unfold the noise;
    /// same syntax as --berkson
    #[arg(long, value_name = "ERROR")]
    classical: Option<String>,
    /// Clip negative density values to zero and renormalize
    #[arg(long)]
    clip: bool,
    /// Write the estimate here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CdfArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Starting point of the CDF: `auto` (data-driven) or `fixed:<angle>`
    #[arg(long, default_value = "auto")]
    origin: String,
    /// Series order: an integer, `sqrt-n`, or `opt`
    #[arg(long, default_value = "opt")]
    m: String,
    /// Number of subdivisions of the period; the output has grid+1 rows
    /// covering [origin, origin + 2pi] inclusive
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Write the estimate here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Which table to reproduce: t1, t2, t3, t4, t5, appendix-b, or all
    #[arg(long)]
    table: String,
    /// Monte Carlo replications per cell (the published studies use 500)
    #[arg(long, default_value_t = 500)]
    n_reps: usize,
    /// Master seed (default: $CIRCFEJER_SEED, else 20240801)
    #[arg(long)]
    seed: Option<u64>,
    /// Directory receiving `<table>.csv`
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests print on stdout and exit cleanly;
            // genuine usage errors exit with the parse-error code.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Density(args) => cmd_density(&args),
        Command::Cdf(args) => cmd_cdf(&args),
        Command::Reproduce(args) => cmd_reproduce(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

/// Load the sample shared by `density` and `cdf`, echoing its provenance.
fn load_input(args: &InputArgs, header: &mut String) -> Result<AngleSample, CliError> {
    let phase = parse_angle(&args.phase_shift).map_err(CliError::parse)?;
    let loaded = load_sample(&args.input, args.degrees, phase)?;
    writeln!(header, "# input: {}", args.input).unwrap();
    writeln!(header, "# n: {}", loaded.sample.len()).unwrap();
    if loaded.weighted {
        writeln!(header, "# total_weight: {}", loaded.sample.total_weight()).unwrap();
    }
    Ok(loaded.sample)
}

/// Resolve a density-style order rule, echoing the plug-in diagnostics.
fn resolve_density_order(
    rule: CliMRule,
    raw: &str,
    sample: &AngleSample,
    classical: Option<&ErrorModel>,
    header: &mut String,
) -> Result<FejerOrder, CliError> {
    let n = effective_n(sample);
    let order = match rule {
        CliMRule::Fixed(v) => FejerOrder::new(v)?,
        CliMRule::SqrtN => FejerOrder::new(((n as f64).sqrt() as u32).max(1))?,
        CliMRule::OptParametric | CliMRule::OptNonparametric => {
            let theta1 = match rule {
                CliMRule::OptParametric => theta1_parametric_vm(sample)?,
                _ => theta1_nonparametric(sample, None, false)?,
            };
            describe_theta1(&theta1, header);
            let selected = match classical {
                None => m_opt_density(theta1.value, n)?,
                Some(ErrorModel::WrappedLaplace { rate }) => {
                    m_opt_classical_wl(theta1.value, n, 1.0 / rate)?
                }
                Some(_) => {
                    return Err(CliError::parse(
                        "plug-in order selection under classical errors is available \
                         for wrapped Laplace noise only; pass --m <integer>",
                    ))
                }
            };
            if selected.uniform_flagged {
                writeln!(header, "# note: data look uniform; order fell to minimum").unwrap();
            }
            selected.m
        }
        CliMRule::OptCdf => unreachable!("cdf rule rejected at parse time"),
    };
    writeln!(header, "# m: {}", order.get()).unwrap();
    writeln!(header, "# m_rule: {raw}").unwrap();
    Ok(order)
}

fn describe_theta1(estimate: &Theta1Estimate, header: &mut String) {
    writeln!(header, "# theta1_hat: {}", estimate.value).unwrap();
    match estimate.method {
        Theta1Method::ParametricVonMises => {
            writeln!(header, "# theta1_method: parametric-vm").unwrap();
            if let Some(kappa) = estimate.kappa_hat {
                writeln!(header, "# kappa_hat: {kappa}").unwrap();
            }
        }
        Theta1Method::NonparametricBiased | Theta1Method::NonparametricUnbiased => {
            writeln!(header, "# theta1_method: nonparametric").unwrap();
            if let Some(truncation) = estimate.truncation {
                writeln!(header, "# truncation: {truncation}").unwrap();
            }
        }
    }
    if estimate.near_degenerate {
        writeln!(
            header,
            "# note: sample is highly concentrated; plug-in may be unstable"
        )
        .unwrap();
    }
}

fn cmd_density(args: &DensityArgs) -> Result<(), CliError> {
    let mut header = String::from("# command: density\n");
    let sample = load_input(&args.input, &mut header)?;
    if args.grid < 2 {
        return Err(CliError::parse("--grid must be at least 2"));
    }
    let rule = parse_m_rule(&args.m, false).map_err(CliError::parse)?;

    let parse_model = |raw: &Option<String>| -> Result<Option<ErrorModel>, CliError> {
        match raw {
            None => Ok(None),
            Some(s) => {
                let model = parse_error_model(s).map_err(CliError::parse)?;
                model.validate()?;
                Ok(Some(model))
            }
        }
    };
    let berkson = parse_model(&args.berkson)?;
    let classical = parse_model(&args.classical)?;

    let m = resolve_density_order(rule, &args.m, &sample, classical.as_ref(), &mut header)?;
    let grid = uniform_grid(args.grid);
    let estimate = if let Some(error) = &berkson {
        writeln!(header, "# berkson: {}", args.berkson.as_deref().unwrap()).unwrap();
        berkson_estimate(&sample, m, error, &grid)?
    } else if let Some(error) = &classical {
        writeln!(
            header,
            "# classical: {}",
            args.classical.as_deref().unwrap()
        )
        .unwrap();
        classical_estimate(&sample, m, error, &grid)?
    } else {
        density_estimate(&sample, m, &grid)?
    };
    writeln!(header, "# negative_mass: {}", negative_mass(&estimate)?).unwrap();
    let final_estimate = if args.clip {
        let (clipped, removed) = clip_and_renormalize(&estimate)?;
        writeln!(header, "# clipped_mass: {removed}").unwrap();
        clipped
    } else {
        estimate
    };
    writeln!(header, "# grid: {}", args.grid).unwrap();
    emit_grid(&header, &final_estimate, args.output.as_deref())
}

fn cmd_cdf(args: &CdfArgs) -> Result<(), CliError> {
    let mut header = String::from("# command: cdf\n");
    let sample = load_input(&args.input, &mut header)?;
    if args.grid < 2 {
        return Err(CliError::parse("--grid must be at least 2"));
    }
    let rule = parse_m_rule(&args.m, true).map_err(CliError::parse)?;
    let origin_rule = parse_origin(&args.origin).map_err(CliError::parse)?;

    let origin = match origin_rule {
        CliOrigin::Fixed(theta0) => reduce_angle(theta0),
        CliOrigin::Auto => {
            if sample.len() < 2 {
                return Err(CliError::degenerate(
                    "data-driven origin selection requires at least 2 observations",
                ));
            }
            let chosen = select_origin(&sample)?;
            writeln!(header, "# criterion_min: {}", chosen.criterion_min).unwrap();
            writeln!(header, "# criterion_max: {}", chosen.criterion_max).unwrap();
            chosen.theta0
        }
    };
    writeln!(header, "# origin: {origin}").unwrap();
    writeln!(header, "# origin_rule: {}", args.origin).unwrap();

    let n = effective_n(&sample);
    let m = match rule {
        CliMRule::Fixed(v) => FejerOrder::new(v)?,
        CliMRule::SqrtN => FejerOrder::new(((n as f64).sqrt() as u32).max(1))?,
        CliMRule::OptCdf => m_opt_cdf(&sample, origin)?.m,
        _ => unreachable!("density rules rejected at parse time"),
    };
    writeln!(header, "# m: {}", m.get()).unwrap();
    writeln!(header, "# m_rule: {}", args.m).unwrap();
    writeln!(header, "# grid: {}", args.grid).unwrap();

    // Inclusive grid over one full period so the first row shows CDF 0 at
    // the origin and the last row shows CDF 1 at origin + 2 pi.
    let thetas: Vec<f64> = (0..=args.grid)
        .map(|j| origin + TAU * j as f64 / args.grid as f64)
        .collect();
    let estimate = cdf_estimate(&sample, m, origin, &thetas)?;
    emit_grid(&header, &estimate, args.output.as_deref())
}

/// Print header plus `theta,value` rows at 17 significant digits (enough
/// for the printed floats to parse back bit-identically).
fn emit_grid(
    header: &str,
    estimate: &EstimateGrid,
    output: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let mut text = String::with_capacity(header.len() + 64 * estimate.theta.len());
    text.push_str(header);
    text.push_str("# columns: theta,value\n");
    for (theta, value) in estimate.theta.iter().zip(&estimate.values) {
        writeln!(text, "{theta:.16e},{value:.16e}").unwrap();
    }
    write_output(&text, output)
}

fn write_output(text: &str, output: Option<&std::path::Path>) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::parse(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_reproduce(args: &ReproduceArgs) -> Result<(), CliError> {
    let tables: Vec<TableId> = if args.table.eq_ignore_ascii_case("all") {
        TableId::ALL.to_vec()
    } else {
        vec![TableId::parse(&args.table).ok_or_else(|| {
            CliError::parse(format!(
                "unknown table '{}' (expected t1, t2, t3, t4, t5, appendix-b, or all)",
                args.table
            ))
        })?]
    };
    if args.n_reps == 0 {
        return Err(CliError::parse("--n-reps must be at least 1"));
    }
    let seed = args.seed.unwrap_or_else(|| {
        std::env::var(SEED_ENV)
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(DEFAULT_SEED)
    });
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::parse(format!("cannot create {}: {e}", args.out_dir.display())))?;
    for id in tables {
        let table = run_table(id, args.n_reps, seed)?;
        let path = args.out_dir.join(format!("{}.csv", id.name()));
        std::fs::write(&path, table.to_csv())
            .map_err(|e| CliError::parse(format!("cannot write {}: {e}", path.display())))?;
        let checks: usize = table.rows.iter().map(|r| r.ref_checks.len()).sum();
        let passing: usize = table
            .rows
            .iter()
            .flat_map(|r| r.ref_checks.iter())
            .filter(|c| c.ok)
            .count();
        println!(
            "wrote {} ({} rows, seed {}, reference checks {passing}/{checks} ok)",
            path.display(),
            table.rows.len(),
            seed
        );
        if passing < checks {
            println!(
                "note: {} reference cell(s) outside tolerance; see the ref column in the CSV",
                checks - passing
            );
        }
    }
    Ok(())
}
