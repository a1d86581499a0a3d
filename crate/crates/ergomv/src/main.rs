use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ergomv::bench::{bench_csv, run_bench};
use ergomv::config::Axis;
use ergomv::io::{emit, json_string};
use ergomv::run::worker_count;
use ergomv::sweep::FitTarget;
use ergomv::{parse_config, run_experiment, run_sweep, CliError, CliResult, ConfigFile};
use ergomv_core::planner::{asymptotic_cost_order, plan, Algorithm, ParameterPlan, PlannerInput};
use serde::Serialize;

/// Estimators of invariant-measure integrals for ergodic McKean-Vlasov SDEs.
///
/// Exit codes: 0 success, 1 invalid configuration, 2 divergence, 3 I/O error,
/// 4 failed bench check.
#[derive(Debug, Parser)]
#[command(name = "ergomv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a configured experiment; writes per-replication CSV and a JSON summary.
    Run {
        config: PathBuf,
        /// CSV destination (overrides execution.output; stdout when unset).
        #[arg(long)]
        output: Option<PathBuf>,
        /// JSON summary destination (defaults to the CSV path with a .json extension, else stderr).
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Worker threads (overrides execution.workers and ERGOMV_WORKERS).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Repeat an experiment over values of one parameter and fit a rate.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated values, at least three.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_enum)]
        fit: Option<FitTarget>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the parameter allocation and predicted cost for a target accuracy.
    Plan {
        #[arg(long)]
        algorithm: Algorithm,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        cost_constant: f64,
    },
    /// Run the built-in numerical checks and print them as CSV.
    Bench {
        /// Smaller Monte Carlo sizes for the rate checks.
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct PlanReport {
    #[serde(flatten)]
    plan: ParameterPlan,
    epsilon: f64,
    lambda: f64,
    cost_constant: f64,
    asymptotic_cost_order: f64,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn write_summary(path: Option<&Path>, json: &str) -> CliResult<()> {
    match path {
        Some(p) => emit(Some(p), json),
        None => {
            eprint!("{json}");
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run {
            config,
            output,
            summary,
            workers,
        } => {
            let mut cfg = parse_config(&config)?;
            if let Some(o) = output {
                cfg.execution.summary = Some(o.with_extension("json"));
                cfg.execution.output = Some(o);
            }
            if summary.is_some() {
                cfg.execution.summary = summary;
            }
            let workers = worker_count(workers.or(cfg.execution.workers))?;
            let out = run_experiment(&cfg, workers)?;
            emit(cfg.execution.output.as_deref(), &out.csv)?;
            write_summary(cfg.execution.summary.as_deref(), &json_string(&out.summary))?;
            if let (Some(path), Some(traj)) = (&cfg.execution.trajectory, &out.trajectory) {
                emit(Some(path), traj)?;
            }
            Ok(())
        }
        Command::Sweep {
            config,
            axis,
            values,
            fit,
            output,
            summary,
            workers,
        } => {
            let text = std::fs::read_to_string(&config).map_err(|e| CliError::io(&config, e))?;
            let file = ConfigFile::parse(&text)?;
            let base = config.parent().unwrap_or(Path::new("."));
            let workers =
                worker_count(workers.or(file.execution.as_ref().and_then(|e| e.workers)))?;
            let out = run_sweep(&file, base, axis, &values, fit, workers)?;
            let summary = summary.or_else(|| output.as_ref().map(|o| o.with_extension("json")));
            emit(output.as_deref(), &out.csv)?;
            write_summary(summary.as_deref(), &json_string(&out.summary))
        }
        Command::Plan {
            algorithm,
            epsilon,
            lambda,
            cost_constant,
        } => {
            let input =
                PlannerInput::new(algorithm, epsilon, lambda).with_cost_constant(cost_constant);
            let p = plan(&input)?;
            let report = PlanReport {
                plan: p,
                epsilon,
                lambda,
                cost_constant,
                asymptotic_cost_order: asymptotic_cost_order(algorithm, epsilon, lambda),
            };
            emit(None, &json_string(&report))
        }
        Command::Bench { quick, output } => {
            let checks = run_bench(quick)?;
            emit(output.as_deref(), &bench_csv(&checks)?)?;
            let failed = checks.iter().filter(|c| !c.pass).count();
            if failed > 0 {
                return Err(CliError::ChecksFailed(failed));
            }
            Ok(())
        }
    }
}
