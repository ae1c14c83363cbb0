//! Command-line entry point: simulate experiments, compute bound reports,
//! run the verification battery, and emit bound comparisons.
//!
//! Exit codes: 0 on success, 1 when a verification check fails, 2 on usage
//! or configuration errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use ecmi::core::BoundKind;
use ecmi::simulate::SimConfig;
use ecmi::{analyze, output, simulate, verify};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "ecmi",
    about = "Evaluated-CMI generalization bound toolkit",
    long_about = "Simulates supersample experiments on finite toy problems, estimates \
                  samplewise information quantities, evaluates the bound family against \
                  exactly computed generalization gaps, verifies the underlying \
                  concentration inequalities, and emits bound comparisons.\n\n\
                  SVG outputs use a fixed legend: binary_kl #1f77b4, linear #ff7f0e, \
                  sqrt #2ca02c, trivial #d62728, interpolation #9467bd.",
    version
)]
struct Cli {
    /// Worker thread cap; falls back to the ECMI_THREADS environment
    /// variable, then to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a trial batch from a config file and write it out.
    Simulate(SimulateArgs),
    /// Compute bound reports for a previously simulated batch.
    Bounds(BoundsArgs),
    /// Run the concentration and coverage verification battery.
    Verify(VerifyArgs),
    /// Compare bounds analytically: ordering, winner regions, or curves.
    Compare(CompareArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Simulation config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output path for the batch JSON.
    #[arg(long)]
    out: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the compact CSV next to the JSON (same stem, .csv).
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct BoundsArgs {
    /// Batch JSON produced by `simulate`.
    #[arg(long)]
    batch: PathBuf,
    /// Histogram bins for the information estimators (default 2 for binary
    /// losses, 10 otherwise).
    #[arg(long)]
    bins: Option<usize>,
    /// Confidence level for the sampled-mode tail bounds.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Restrict the report to one bound family.
    #[arg(long, value_enum, default_value_t = BoundFilter::All)]
    bound: BoundFilter,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundFilter {
    All,
    SqrtIntegrated,
    SqrtDisintegrated,
    RConditioned,
    Linear,
    Interpolation,
    BinaryKl,
    BinaryKlDisintegrated,
    KlInterpDisintegrated,
    AffineKl,
    HighProb,
}

impl BoundFilter {
    fn keeps(&self, kind: BoundKind) -> bool {
        match self {
            BoundFilter::All => true,
            BoundFilter::SqrtIntegrated => kind == BoundKind::SqrtIntegrated,
            BoundFilter::SqrtDisintegrated => kind == BoundKind::SqrtDisintegrated,
            BoundFilter::RConditioned => kind == BoundKind::RConditionedSqrt,
            BoundFilter::Linear => kind == BoundKind::Linear,
            BoundFilter::Interpolation => kind == BoundKind::Interpolation,
            BoundFilter::BinaryKl => kind == BoundKind::BinaryKl,
            BoundFilter::BinaryKlDisintegrated => kind == BoundKind::BinaryKlDisintegrated,
            BoundFilter::KlInterpDisintegrated => kind == BoundKind::KlInterpDisintegrated,
            BoundFilter::AffineKl => kind == BoundKind::AffineKl,
            BoundFilter::HighProb => {
                kind == BoundKind::HighProbSqrt || kind == BoundKind::HighProbKl
            }
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Print only the exact lower-bound statistic for this n and exit.
    #[arg(long)]
    maurer_n: Option<u32>,
    /// Coverage trials in the default suite (0 skips the coverage checks).
    #[arg(long, default_value_t = 400)]
    coverage_trials: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CompareMode {
    Ordering,
    Regions,
    Curves,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Svg,
    Json,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, value_enum)]
    mode: CompareMode,
    /// Uniform samplewise information value for ordering mode.
    #[arg(long, default_value_t = 0.1)]
    ecmi: f64,
    /// Information grid bounds and size for regions/curves.
    #[arg(long, default_value_t = 1e-3)]
    ecmi_min: f64,
    #[arg(long, default_value_t = 1.0)]
    ecmi_max: f64,
    #[arg(long, default_value_t = 60)]
    ecmi_points: usize,
    /// Training-loss grid for regions mode.
    #[arg(long, default_value_t = 0.0)]
    train_min: f64,
    #[arg(long, default_value_t = 0.5)]
    train_max: f64,
    #[arg(long, default_value_t = 51)]
    train_points: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("ECMI_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(threads) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global();
    }
    match cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Bounds(args) => run_bounds(args),
        Command::Verify(args) => run_verify(args),
        Command::Compare(args) => run_compare(args),
    }
}

fn usage_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_USAGE)
}

fn write_or_print(out: Option<&Path>, contents: &str) -> Result<(), ExitCode> {
    match out {
        Some(path) => fs::write(path, contents).map_err(usage_error),
        None => {
            println!("{contents}");
            Ok(())
        }
    }
}

fn run_simulate(args: SimulateArgs) -> ExitCode {
    let text = match fs::read_to_string(&args.config) {
        Ok(text) => text,
        Err(e) => return usage_error(format!("{}: {e}", args.config.display())),
    };
    let mut config = match SimConfig::from_json(&text) {
        Ok(config) => config,
        Err(e) => return usage_error(e),
    };
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    let (batch, gap) = match simulate::run_experiment(&config) {
        Ok(result) => result,
        Err(e) => return usage_error(e),
    };
    let json = match batch.to_json() {
        Ok(json) => json,
        Err(e) => return usage_error(e),
    };
    if let Err(e) = fs::write(&args.out, &json) {
        return usage_error(format!("{}: {e}", args.out.display()));
    }
    if args.csv {
        let csv_path = args.out.with_extension("csv");
        let mut buf = Vec::new();
        if batch.write_csv(&mut buf).is_err() {
            return usage_error("csv serialization failed");
        }
        if let Err(e) = fs::write(&csv_path, buf) {
            return usage_error(format!("{}: {e}", csv_path.display()));
        }
    }
    println!(
        "wrote {} draws (n={}) to {}; mean gap {:.6} +- {:.6}",
        batch.draws.len(),
        batch.rows,
        args.out.display(),
        gap.mean_gap,
        gap.se_gap
    );
    ExitCode::SUCCESS
}

fn run_bounds(args: BoundsArgs) -> ExitCode {
    let text = match fs::read_to_string(&args.batch) {
        Ok(text) => text,
        Err(e) => return usage_error(format!("{}: {e}", args.batch.display())),
    };
    let batch = match ecmi::core::TrialBatch::from_json(&text) {
        Ok(batch) => batch,
        Err(e) => return usage_error(e),
    };
    let bins = args.bins.unwrap_or(match batch.granularity {
        ecmi::core::LossGranularity::Binary => 2,
        ecmi::core::LossGranularity::Continuous => 10,
    });
    if bins < 2 {
        return usage_error("bins must be at least 2");
    }
    if !(args.delta > 0.0 && args.delta < 1.0) {
        return usage_error("delta must lie in (0, 1)");
    }
    let mut report = match analyze::experiment_report(&batch, bins) {
        Ok(report) => report,
        Err(e) => return usage_error(e),
    };
    match analyze::sampled_highprob_reports(&batch, bins, args.delta) {
        Ok(extra) => report.bounds.extend(extra),
        Err(e) => return usage_error(e),
    }
    report.bounds.retain(|b| args.bound.keeps(b.name));
    if report.bounds.is_empty() {
        return usage_error("the requested bound is not available for this batch");
    }

    // Human-readable table on stderr so stdout stays machine-parseable.
    eprintln!("{:<26} {:>10} {:>12} {:>6}", "bound", "value", "se", "ok");
    for bound in &report.bounds {
        if bound.applicable {
            eprintln!(
                "{:<26} {:>10.6} {:>12} {:>6}",
                bound.name.as_str(),
                bound.value,
                bound
                    .intermediates
                    .value_se
                    .map(|se| format!("{se:.6}"))
                    .unwrap_or_else(|| "-".into()),
                if bound.intermediates.vacuous { "vac" } else { "yes" }
            );
        } else {
            let note = if bound.name == BoundKind::Interpolation
                || bound.name == BoundKind::KlInterpDisintegrated
            {
                "inapplicable: training loss is nonzero, the interpolation \
                 derivation requires exactly zero"
            } else {
                "inapplicable"
            };
            eprintln!("{:<26} {:>10} ({note})", bound.name.as_str(), "-");
        }
    }
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if write_or_print(args.out.as_deref(), &json).is_err() {
        return ExitCode::from(EXIT_USAGE);
    }
    ExitCode::SUCCESS
}

fn run_verify(args: VerifyArgs) -> ExitCode {
    if let Some(n) = args.maurer_n {
        return match verify::check_maurer_lower(n) {
            Ok(outcome) => {
                println!("{}", outcome.statistic);
                if outcome.pass {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_CHECK_FAILED)
                }
            }
            Err(e) => usage_error(e),
        };
    }
    let outcomes = match verify::default_suite(args.coverage_trials) {
        Ok(outcomes) => outcomes,
        Err(e) => return usage_error(e),
    };
    let all_pass = outcomes.iter().all(|o| o.pass);
    for outcome in &outcomes {
        eprintln!(
            "{} {:<24} statistic={:.9} threshold={:.9}",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.name,
            outcome.statistic,
            outcome.threshold
        );
    }
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "schema": ecmi::core::SCHEMA_VERSION,
        "config": { "coverage_trials": args.coverage_trials },
        "checks": outcomes,
    }))
    .expect("outcomes serialize");
    if write_or_print(args.out.as_deref(), &json).is_err() {
        return ExitCode::from(EXIT_USAGE);
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}

fn run_compare(args: CompareArgs) -> ExitCode {
    match args.mode {
        CompareMode::Ordering => {
            let entries = match analyze::ordering_check(args.ecmi) {
                Ok(entries) => entries,
                Err(e) => return usage_error(e),
            };
            match args.format {
                OutputFormat::Json => {
                    let json = serde_json::to_string_pretty(&serde_json::json!({
                        "schema": ecmi::core::SCHEMA_VERSION,
                        "config": { "mode": "ordering", "ecmi": args.ecmi },
                        "entries": entries,
                    }))
                    .expect("serializes");
                    if write_or_print(args.out.as_deref(), &json).is_err() {
                        return ExitCode::from(EXIT_USAGE);
                    }
                }
                _ => {
                    let mut buf = Vec::new();
                    if output::write_ordering_csv(&mut buf, args.ecmi, &entries).is_err() {
                        return usage_error("csv serialization failed");
                    }
                    let text = String::from_utf8(buf).expect("utf8");
                    if write_or_print(args.out.as_deref(), &text).is_err() {
                        return ExitCode::from(EXIT_USAGE);
                    }
                }
            }
            ExitCode::SUCCESS
        }
        CompareMode::Regions => {
            if args.ecmi_points == 0 || args.train_points == 0 {
                return usage_error("grids need at least one point");
            }
            let ecmi_grid = analyze::log_spaced(args.ecmi_min, args.ecmi_max, args.ecmi_points);
            let train_grid =
                analyze::linear_spaced(args.train_min, args.train_max, args.train_points);
            let map = match analyze::region_map(&ecmi_grid, &train_grid) {
                Ok(map) => map,
                Err(e) => return usage_error(e),
            };
            let text = match args.format {
                OutputFormat::Svg => output::region_svg(&map),
                OutputFormat::Json => serde_json::to_string_pretty(&serde_json::json!({
                    "schema": ecmi::core::SCHEMA_VERSION,
                    "config": {
                        "mode": "regions",
                        "ecmi_min": args.ecmi_min,
                        "ecmi_max": args.ecmi_max,
                        "ecmi_points": args.ecmi_points,
                        "train_min": args.train_min,
                        "train_max": args.train_max,
                        "train_points": args.train_points,
                    },
                    "map": map,
                }))
                .expect("serializes"),
                OutputFormat::Csv => {
                    let mut buf = Vec::new();
                    if output::write_region_csv(&mut buf, &map).is_err() {
                        return usage_error("csv serialization failed");
                    }
                    String::from_utf8(buf).expect("utf8")
                }
            };
            if write_or_print(args.out.as_deref(), &text).is_err() {
                return ExitCode::from(EXIT_USAGE);
            }
            ExitCode::SUCCESS
        }
        CompareMode::Curves => {
            let grid = analyze::log_spaced(args.ecmi_min, args.ecmi_max.min(0.5), args.ecmi_points);
            let curves = match analyze::bound_curves(&grid) {
                Ok(curves) => curves,
                Err(e) => return usage_error(e),
            };
            let text = match args.format {
                OutputFormat::Svg => output::curves_svg(&curves),
                OutputFormat::Json => serde_json::to_string_pretty(&serde_json::json!({
                    "schema": ecmi::core::SCHEMA_VERSION,
                    "config": {
                        "mode": "curves",
                        "ecmi_min": args.ecmi_min,
                        "ecmi_max": args.ecmi_max.min(0.5),
                        "ecmi_points": args.ecmi_points,
                    },
                    "curves": curves,
                }))
                .expect("serializes"),
                OutputFormat::Csv => {
                    let mut buf = Vec::new();
                    if output::write_curves_csv(&mut buf, &curves).is_err() {
                        return usage_error("csv serialization failed");
                    }
                    String::from_utf8(buf).expect("utf8")
                }
            };
            if write_or_print(args.out.as_deref(), &text).is_err() {
                return ExitCode::from(EXIT_USAGE);
            }
            ExitCode::SUCCESS
        }
    }
}
