//! Command-line front end: training, tuning, the grid baseline, full
//! experiments and report regeneration. Primary output is machine-readable
//! (JSON to stdout, CSV/JSON files on disk); errors go to stderr with exit
//! code 2 for usage problems and 1 for runtime failures.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use svmtune::dataio::{self, Dataset, LabelRule, SplitSpec};
use svmtune::harness::{self, ExperimentConfig};
use svmtune::solvers::{self, SolverKind, TrainConfig};
use svmtune::tuner::{self, TuneConfig, TuneResult};

/// Every PRNG in the pipeline derives from this when no --seed is given.
const DEFAULT_SEED: u64 = 0;

#[derive(Parser)]
#[command(name = "svmtune", version, about = "Anytime SVM training and hyperparameter selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model at fixed hyperparameters.
    Train(TrainArgs),
    /// Tune hyperparameters with EGO, then retrain at the best point.
    Tune(TuneArgs),
    /// Grid-search baseline, then retrain at the best point.
    Grid(GridArgs),
    /// Run a full experiment from a JSON config file.
    Experiment(ExperimentArgs),
    /// Regenerate report tables from a persisted experiment directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Input file in LIBSVM sparse format.
    data: PathBuf,
    /// Binarize multiclass labels, e.g. `one-vs-rest:3`.
    #[arg(long)]
    binarize: Option<String>,
    /// Rescale every feature to [0,1].
    #[arg(long)]
    scale: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "smo")]
    solver: String,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Wall-clock training deadline in seconds; omit for untruncated.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "model.json")]
    model_out: PathBuf,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "lasvm")]
    solver: String,
    /// EGO iterations after the initial design.
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// Proposals per EGO iteration.
    #[arg(long, default_value_t = 20)]
    batch: usize,
    /// Initial design size.
    #[arg(long, default_value_t = 20)]
    init: usize,
    /// Per-evaluation deadline in seconds, or `auto` for the
    /// 2^(log10(n)+1) heuristic on the training-part size.
    #[arg(long, default_value = "auto")]
    time_limit: String,
    /// Deadline for the final retraining at the best point.
    #[arg(long, default_value_t = 300.0)]
    final_time_limit: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "tune-out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "lasvm")]
    solver: String,
    /// Grid resolution per axis over [-15,15] in log2 space.
    #[arg(long, default_value_t = 11)]
    grid_size: usize,
    /// Per-evaluation deadline in seconds; omit for untruncated.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 300.0)]
    final_time_limit: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "grid-out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment config (see ExperimentConfig schema).
    config: PathBuf,
    /// Parallel cells; 1 keeps timings reproducible.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory a previous `experiment` run wrote into.
    run_dir: PathBuf,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<svmtune::Error> for CliError {
    fn from(e: svmtune::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn parse_solver(name: &str) -> Result<SolverKind, CliError> {
    name.parse()
        .map_err(|_| CliError::Usage(format!("unknown solver `{name}` (expected smo, lasvm or bsgd)")))
}

fn load_data(args: &DataArgs) -> Result<Dataset, CliError> {
    let rule = match &args.binarize {
        None => LabelRule::Sign,
        Some(s) => match s.strip_prefix("one-vs-rest:") {
            Some(class) => match class.parse::<f64>() {
                Ok(c) => LabelRule::OneVsRest(c),
                Err(_) => return usage(format!("bad --binarize class `{class}`")),
            },
            None => return usage(format!("bad --binarize `{s}` (expected one-vs-rest:<class>)")),
        },
    };
    if !args.data.is_file() {
        return usage(format!("data file {} not found", args.data.display()));
    }
    let name = args
        .data
        .file_stem()
        .map_or_else(|| "data".to_string(), |s| s.to_string_lossy().into_owned());
    let file = fs::File::open(&args.data).map_err(|e| CliError::Runtime(e.to_string()))?;
    let ds = dataio::parse_libsvm(std::io::BufReader::new(file), rule, &name)?;
    Ok(if args.scale { dataio::scale_unit(&ds) } else { ds })
}

fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let solver = parse_solver(&args.solver)?;
    let ds = load_data(&args.data)?;
    let mut cfg = TrainConfig::new(args.c, args.gamma)?.with_seed(args.seed);
    cfg.deadline = args.time_limit;
    cfg.validate()?;
    let model = solvers::train(solver, &ds, &cfg)?;
    fs::write(&args.model_out, model.to_json()?).map_err(|e| CliError::Runtime(e.to_string()))?;
    println!(
        "{}",
        json!({
            "solver": solver.name(),
            "elapsed_seconds": model.meta.elapsed_seconds,
            "support_vectors": model.num_support_vectors(),
            "converged": model.meta.converged,
            "dual_objective": model.meta.dual_objective,
            "iterations": model.meta.iterations,
            "model_path": args.model_out,
        })
    );
    Ok(())
}

fn write_tune_outputs(out_dir: &PathBuf, result: &TuneResult, model_json: &str) -> Result<(), CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut history = fs::File::create(out_dir.join("history.csv"))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    result.write_history_csv(&mut history)?;
    fs::write(out_dir.join("model.json"), model_json).map_err(|e| CliError::Runtime(e.to_string()))?;
    let result_json =
        serde_json::to_string_pretty(result).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(out_dir.join("result.json"), result_json)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(())
}

fn print_tune_summary(result: &TuneResult, out_dir: &PathBuf) {
    println!(
        "{}",
        json!({
            "best_log2_c": result.best_point.log2_c,
            "best_log2_gamma": result.best_point.log2_gamma,
            "best_validation_error": result.best_error,
            "evaluations": result.history.len(),
            "total_tune_seconds": result.total_tune_seconds,
            "out_dir": out_dir,
        })
    );
}

fn cmd_tune(args: &TuneArgs) -> Result<(), CliError> {
    let solver = parse_solver(&args.solver)?;
    let ds = load_data(&args.data)?;
    let (train, val, _test) = dataio::split(&ds, &SplitSpec::two_one_one(args.seed))?;
    let deadline = match args.time_limit.as_str() {
        "auto" => Some(harness::time_limit_heuristic(train.len())),
        s => match s.parse::<f64>() {
            Ok(v) if v >= 0.0 => Some(v),
            _ => return usage(format!("bad --time-limit `{s}` (expected seconds or `auto`)")),
        },
    };
    let cfg = TuneConfig {
        initial_design_size: args.init,
        iterations: args.iters,
        batch_size: args.batch,
        seed: args.seed,
        solver,
        deadline,
        ..TuneConfig::default()
    };
    cfg.validate()?;
    let result = tuner::ego_tune(&train, &val, &cfg)?;
    let model = tuner::retrain_final(
        &train,
        result.best_point,
        solver,
        Some(args.final_time_limit),
        args.seed,
    )?;
    write_tune_outputs(&args.out_dir, &result, &model.to_json()?)?;
    print_tune_summary(&result, &args.out_dir);
    Ok(())
}

fn cmd_grid(args: &GridArgs) -> Result<(), CliError> {
    let solver = parse_solver(&args.solver)?;
    if args.grid_size == 0 {
        return usage("--grid-size must be >= 1");
    }
    let ds = load_data(&args.data)?;
    let (train, val, _test) = dataio::split(&ds, &SplitSpec::two_one_one(args.seed))?;
    let grid = tuner::log_grid(args.grid_size);
    let result = tuner::grid_search(&train, &val, &grid, &grid, solver, args.time_limit, args.seed)?;
    let model = tuner::retrain_final(
        &train,
        result.best_point,
        solver,
        Some(args.final_time_limit),
        args.seed,
    )?;
    write_tune_outputs(&args.out_dir, &result, &model.to_json()?)?;
    print_tune_summary(&result, &args.out_dir);
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<(), CliError> {
    if !args.config.is_file() {
        return usage(format!("config file {} not found", args.config.display()));
    }
    let mut cfg = ExperimentConfig::from_json_file(&args.config)
        .map_err(|e| CliError::Usage(format!("bad config: {e}")))?;
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    // Eager validation: every dataset must load before any training runs.
    for spec in &cfg.datasets {
        spec.load()
            .map_err(|e| CliError::Usage(format!("dataset {}: {e}", spec.name())))?;
    }
    let report = harness::run_experiment(&cfg)?;
    println!(
        "{}",
        json!({
            "out_dir": cfg.output_dir,
            "cells": report.cells.len(),
            "failed_cells": report.failed_cells,
            "summaries": report.summaries.len(),
        })
    );
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<(), CliError> {
    harness::regenerate_tables(&args.run_dir)?;
    println!("{}", json!({ "out_dir": args.run_dir }));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Report(a) => cmd_report(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
