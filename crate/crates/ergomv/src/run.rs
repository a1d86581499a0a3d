//! Replicated experiment execution on a bounded worker pool.

use std::time::Instant;

use ergomv_core::dynamics::run_ensemble;
use ergomv_core::estimators::ExperimentResult;
use ergomv_core::experiment::Experiment;
use ergomv_core::planner::{consistency_check, ConsistencyReport, ParameterPlan};
use ergomv_core::{Accumulator, CostLedger};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::io::{csv_string, trajectory_header};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "ERGOMV_WORKERS";

pub const CSV_HEADER: [&str; 13] = [
    "algorithm",
    "t",
    "n",
    "N",
    "M",
    "schedule",
    "seed",
    "estimate",
    "reference",
    "abs_error",
    "kernel_evals",
    "noise_draws",
    "wall_time_s",
];

#[derive(Debug, Clone, Serialize)]
struct Row<'a> {
    algorithm: &'a str,
    t: f64,
    n: usize,
    #[serde(rename = "N")]
    particles: usize,
    #[serde(rename = "M")]
    ensembles: usize,
    schedule: &'a str,
    seed: u64,
    estimate: f64,
    reference: Option<f64>,
    abs_error: Option<f64>,
    kernel_evals: u64,
    noise_draws: u64,
    wall_time_s: Option<f64>,
}

/// Aggregate over all replications of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub algorithm: String,
    pub model: String,
    pub observable: String,
    pub plan: ParameterPlan,
    pub seed: u64,
    pub replications: usize,
    pub mean: f64,
    /// Sample standard deviation; absent for a single replication.
    pub std: Option<f64>,
    pub reference: Option<f64>,
    pub bias: Option<f64>,
    /// Root mean squared deviation from the reference.
    pub mse: Option<f64>,
    pub kernel_evals: u64,
    pub noise_draws: u64,
    /// Ledger of the first replication against the planned cost.
    pub consistency: ConsistencyReport,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub results: Vec<ExperimentResult>,
    pub summary: Summary,
    pub csv: String,
    pub trajectory: Option<String>,
}

/// Worker count: explicit value, else the environment variable, else all cores.
pub fn worker_count(explicit: Option<usize>) -> CliResult<usize> {
    if let Some(w) = explicit {
        return if w == 0 {
            Err(CliError::validation("worker count must be at least 1"))
        } else {
            Ok(w)
        };
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(CliError::validation(format!(
                "{WORKERS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub fn pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::validation(format!("cannot start {workers} workers: {e}")))
}

/// Run every replication of `cfg`; results are ordered by replication.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> CliResult<RunOutput> {
    let exp = cfg.experiment();
    let reference = cfg.reference_value()?;
    let reps = cfg.execution.replications as u64;
    let m = cfg.plan.ensembles;
    let tasks: Vec<(u64, usize)> = (0..reps)
        .flat_map(|r| (0..m).map(move |j| (r, j)))
        .collect();

    let parts: Vec<ergomv_core::Result<(Accumulator, CostLedger, f64)>> =
        pool(workers)?.install(|| {
            tasks
                .par_iter()
                .map(|&(r, j)| {
                    let start = Instant::now();
                    let (acc, _, ledger) = exp.run_ensemble(r, j)?;
                    Ok((acc, ledger, start.elapsed().as_secs_f64()))
                })
                .collect()
        });

    let mut results = Vec::with_capacity(reps as usize);
    let mut parts = parts.into_iter();
    for r in 0..reps {
        let mut chunk = Vec::with_capacity(m);
        let mut elapsed = 0.0;
        for _ in 0..m {
            let (acc, ledger, secs) = parts.next().expect("one part per task")?;
            elapsed += secs;
            chunk.push((acc, ledger));
        }
        let wall = cfg.execution.timing.then_some(elapsed);
        results.push(exp.finish(r, chunk, wall)?.with_reference(reference));
    }

    let summary = summarise(cfg, &exp, &results, reference)?;
    let csv = results_csv(&results)?;
    let trajectory = match &cfg.execution.trajectory {
        Some(_) => Some(trajectory_csv(&exp, 0)?),
        None => None,
    };
    Ok(RunOutput {
        results,
        summary,
        csv,
        trajectory,
    })
}

pub fn results_csv(results: &[ExperimentResult]) -> CliResult<String> {
    let rows: Vec<Row> = results
        .iter()
        .map(|r| Row {
            algorithm: &r.algorithm,
            t: r.t,
            n: r.n,
            particles: r.particles,
            ensembles: r.ensembles,
            schedule: &r.schedule,
            seed: r.seed,
            estimate: r.estimate,
            reference: r.reference,
            abs_error: r.error,
            kernel_evals: r.ledger.kernel_evals,
            noise_draws: r.ledger.noise_draws,
            wall_time_s: r.wall_time,
        })
        .collect();
    csv_string(&CSV_HEADER, &rows)
}

fn summarise(
    cfg: &ExperimentConfig,
    exp: &Experiment,
    results: &[ExperimentResult],
    reference: Option<f64>,
) -> CliResult<Summary> {
    let estimates: Vec<f64> = results.iter().map(|r| r.estimate).collect();
    let mean = ergomv_core::numeric::mean(&estimates);
    let std =
        (estimates.len() > 1).then(|| ergomv_core::numeric::sample_variance(&estimates).sqrt());
    let mse = reference.map(|r| {
        let sq: Vec<f64> = estimates.iter().map(|e| (e - r) * (e - r)).collect();
        (ergomv_core::numeric::exact_sum(&sq) / sq.len() as f64).sqrt()
    });
    let mut total = CostLedger::default();
    results.iter().for_each(|r| total.merge(&r.ledger));
    Ok(Summary {
        algorithm: cfg.plan.algorithm.label().to_string(),
        model: cfg.model_name.clone(),
        observable: cfg.observable.name(),
        plan: cfg.plan,
        seed: cfg.execution.seed,
        replications: results.len(),
        mean,
        std,
        reference,
        bias: reference.map(|r| (mean - r).abs()),
        mse,
        kernel_evals: total.kernel_evals,
        noise_draws: total.noise_draws,
        consistency: consistency_check(&exp.plan, &results[0].ledger, exp.evaluation)?,
    })
}

/// Every state of every ensemble of one replication, as CSV.
pub fn trajectory_csv(exp: &Experiment, replication: u64) -> CliResult<String> {
    let cfg = exp.simulation_config(replication)?;
    let dim = exp.model.dim();
    let header = trajectory_header(dim);
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    let to_io = |e: csv::Error| CliError::io("<trajectory>", std::io::Error::other(e));
    w.write_record(&header).map_err(to_io)?;
    let mut failure = None;
    for j in 0..cfg.ensembles {
        run_ensemble(&exp.model, &cfg, j, &mut |s| {
            if failure.is_some() {
                return;
            }
            let time = cfg.grid.point(s.step());
            for (i, x) in s.active_positions().chunks_exact(dim).enumerate() {
                let mut rec = vec![
                    replication.to_string(),
                    j.to_string(),
                    s.step().to_string(),
                    time.to_string(),
                    i.to_string(),
                ];
                rec.extend(x.iter().map(|v| v.to_string()));
                if let Err(e) = w.write_record(&rec) {
                    failure = Some(e);
                    return;
                }
            }
        })?;
    }
    if let Some(e) = failure {
        return Err(to_io(e));
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::io("<trajectory>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
