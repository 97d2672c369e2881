//! Command-line front end for the diamond-ib bounds.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use diamond_ib::experiments::{
    parse_schemes, run_sweep, verify, Range, Scheme, SweepMode, SweepSpec, VerifyHooks,
};
use diamond_ib::SolverSettings;

use config::ConfigFile;

#[derive(Parser)]
#[command(name = "diamond-ib", version, about = "Bounds on the bottleneck rate of a two-relay Rayleigh-fading diamond channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the bounds at a single point and print one CSV row.
    Bound {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sweep SNR or link budget and write a CSV.
    Sweep {
        /// Figure preset: fig2 (C = 10, 0-60 dB) or fig3 (40 dB, C = 0-25).
        #[arg(long)]
        preset: Option<String>,
        /// Custom sweep variable: snr or budget.
        #[arg(long)]
        sweep: Option<String>,
        /// Custom range start:stop:step, in dB for snr and bits for budget.
        #[arg(long)]
        range: Option<String>,
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the oracle checks and print a pass/fail table.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Perturb the seed of the determinism rerun (self-test).
        #[arg(long, hide = true)]
        corrupt_seed: bool,
    },
}

#[derive(Args, Default)]
struct PointArgs {
    /// Noise power σ² (the SNR is 1/σ²).
    #[arg(long, conflicts_with = "snr_db")]
    sigma2: Option<f64>,
    /// SNR in dB [default: 40].
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    /// Budget of relay 1 in bits per complex dimension [default: 10].
    #[arg(long)]
    c1: Option<f64>,
    /// Budget of relay 2 [default: same as --c1].
    #[arg(long)]
    c2: Option<f64>,
    /// Comma-separated schemes from ub, qci_J2, qci_J4, qci_J8, tci, mmse,
    /// or `all` [default: all].
    #[arg(long)]
    scheme: Option<String>,
    /// CSV output path [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct CommonArgs {
    /// key = value file with defaults for any long flag.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master RNG seed [default: 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo sample count [default: 1000000].
    #[arg(long)]
    samples: Option<usize>,
    /// Initial Gauss-Laguerre order [default: 64].
    #[arg(long)]
    quad_order: Option<usize>,
    /// Absolute solver tolerance [default: 1e-9].
    #[arg(long)]
    tol: Option<f64>,
}

const DEFAULT_SNR_DB: f64 = 40.0;
const DEFAULT_BUDGET: f64 = 10.0;

fn load_config(common: &CommonArgs) -> Result<ConfigFile, String> {
    match &common.config {
        Some(path) => ConfigFile::load(path),
        None => Ok(ConfigFile::default()),
    }
}

fn settings(common: &CommonArgs, file: &ConfigFile) -> Result<SolverSettings, String> {
    let defaults = SolverSettings::default();
    let settings = SolverSettings {
        seed: pick(common.seed, file.get("seed")?, defaults.seed),
        mc_samples: pick(common.samples, file.get("samples")?, defaults.mc_samples),
        quad_order: pick(common.quad_order, file.get("quad_order")?, defaults.quad_order),
        abs_tol: pick(common.tol, file.get("tol")?, defaults.abs_tol),
        ..defaults
    };
    settings.validate().map_err(|e| e.to_string())?;
    Ok(settings)
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn text(flag: &Option<String>, file: &ConfigFile, key: &str) -> Option<String> {
    flag.clone().or_else(|| file.text(key).map(str::to_string))
}

/// Resolved single-point parameters.
struct Point {
    snr_db: f64,
    budgets: [f64; 2],
    schemes: Vec<Scheme>,
    out: Option<PathBuf>,
}

fn point(args: &PointArgs, file: &ConfigFile) -> Result<Point, String> {
    let from_sigma2 = |s: f64| {
        if s > 0.0 && s.is_finite() {
            Ok(-10.0 * s.log10())
        } else {
            Err(format!("--sigma2 must be positive, got {s}"))
        }
    };
    let snr_db = match (args.sigma2, args.snr_db) {
        (Some(s), _) => from_sigma2(s)?,
        (None, Some(db)) => db,
        (None, None) => match (file.get::<f64>("sigma2")?, file.get::<f64>("snr_db")?) {
            (Some(_), Some(_)) => return Err("config sets both sigma2 and snr_db".into()),
            (Some(s), None) => from_sigma2(s)?,
            (None, db) => db.unwrap_or(DEFAULT_SNR_DB),
        },
    };
    let c1 = pick(args.c1, file.get("c1")?, DEFAULT_BUDGET);
    let c2 = pick(args.c2, file.get("c2")?, c1);
    let schemes = match text(&args.scheme, file, "scheme") {
        Some(list) => parse_schemes(&list).map_err(|e| e.to_string())?,
        None => Scheme::ALL.to_vec(),
    };
    let out = args.out.clone().or_else(|| file.text("out").map(PathBuf::from));
    Ok(Point {
        snr_db,
        budgets: [c1, c2],
        schemes,
        out,
    })
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Bound { point: args, common } => {
            let file = load_config(&common)?;
            let settings = settings(&common, &file)?;
            let p = point(&args, &file)?;
            let spec = SweepSpec {
                mode: SweepMode::Single,
                fixed_snr_db: p.snr_db,
                fixed_c: p.budgets[0],
                fixed_c2: (p.budgets[1] != p.budgets[0]).then_some(p.budgets[1]),
                schemes: p.schemes,
                output_path: p.out,
                ..SweepSpec::fig2(settings)
            };
            run_sweep(&spec).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            preset,
            sweep,
            range,
            point: args,
            common,
        } => {
            let file = load_config(&common)?;
            let settings = settings(&common, &file)?;
            let p = point(&args, &file)?;
            let preset = preset.or_else(|| file.text("preset").map(str::to_string));
            let sweep = sweep.or_else(|| file.text("sweep").map(str::to_string));
            let range = range.or_else(|| file.text("range").map(str::to_string));
            let mut spec = match (preset, sweep) {
                (Some(_), Some(_)) => return Err("use either --preset or --sweep, not both".into()),
                (Some(name), None) => {
                    let mut spec = SweepSpec::preset(&name, settings).map_err(|e| e.to_string())?;
                    if args.scheme.is_some() || file.text("scheme").is_some() {
                        spec.schemes = p.schemes;
                    }
                    spec
                }
                (None, Some(variable)) => {
                    let range: Range = range
                        .ok_or("--sweep needs --range start:stop:step")?
                        .parse()
                        .map_err(|e: diamond_ib::Error| e.to_string())?;
                    let mode = match variable.to_ascii_lowercase().as_str() {
                        "snr" => SweepMode::Snr,
                        "budget" => SweepMode::Budget,
                        other => return Err(format!("unknown sweep '{other}', expected snr or budget")),
                    };
                    SweepSpec {
                        mode,
                        snr_db_range: range,
                        budget_range: range,
                        fixed_snr_db: p.snr_db,
                        fixed_c: p.budgets[0],
                        fixed_c2: (p.budgets[1] != p.budgets[0]).then_some(p.budgets[1]),
                        schemes: p.schemes,
                        ..SweepSpec::fig2(settings)
                    }
                }
                (None, None) => return Err("sweep needs --preset or --sweep".into()),
            };
            spec.output_path = p.out;
            run_sweep(&spec).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            common,
            corrupt_seed,
        } => {
            let file = load_config(&common)?;
            let settings = settings(&common, &file)?;
            let report = verify(&settings, VerifyHooks { corrupt_seed });
            println!("{report}");
            Ok(if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
