//! One-parameter sweeps with a fitted log-linear rate.

use std::path::Path;

use ergomv_core::analysis::{fit_rate, RateFit};
use serde::Serialize;

use crate::config::{Axis, ConfigFile};
use crate::error::{CliError, CliResult};
use crate::io::csv_string;
use crate::run::run_experiment;

pub const SWEEP_HEADER: [&str; 16] = [
    "axis",
    "value",
    "algorithm",
    "t",
    "n",
    "N",
    "M",
    "schedule",
    "predicted_cost",
    "replications",
    "mean",
    "std",
    "reference",
    "abs_error",
    "mse",
    "kernel_evals",
];

/// Quantity regressed against the swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitTarget {
    /// `|mean - reference|`.
    Error,
    Mse,
    PredictedCost,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: &'static str,
    pub value: f64,
    pub algorithm: String,
    pub t: f64,
    pub n: usize,
    #[serde(rename = "N")]
    pub particles: usize,
    #[serde(rename = "M")]
    pub ensembles: usize,
    pub schedule: String,
    pub predicted_cost: f64,
    pub replications: usize,
    pub mean: f64,
    pub std: Option<f64>,
    pub reference: Option<f64>,
    pub abs_error: Option<f64>,
    pub mse: Option<f64>,
    pub kernel_evals: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub axis: Axis,
    /// `ln(value)` for N, n and epsilon; the raw value for t.
    pub abscissa: &'static str,
    pub target: FitTarget,
    pub fit: RateFit,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
    pub csv: String,
}

/// Run the base config once per value of `axis`.
///
/// Without an explicit `target`, the fit uses the error against the reference
/// when one is configured and the predicted cost otherwise.
pub fn run_sweep(
    file: &ConfigFile,
    base_dir: &Path,
    axis: Axis,
    values: &[f64],
    target: Option<FitTarget>,
    workers: usize,
) -> CliResult<SweepOutput> {
    if values.len() < 3 {
        return Err(CliError::validation(format!(
            "a sweep needs at least 3 values of {}, got {}",
            axis.label(),
            values.len()
        )));
    }
    let mut rows = Vec::with_capacity(values.len());
    let mut has_reference = true;
    for &v in values {
        let cfg = file.with_axis(axis, v)?.resolve(base_dir)?;
        let out = run_experiment(&cfg, workers)?;
        let s = out.summary;
        has_reference &= s.reference.is_some();
        rows.push(SweepRow {
            axis: axis.label(),
            value: v,
            algorithm: s.algorithm,
            t: s.plan.t,
            n: s.plan.n,
            particles: s.plan.particles,
            ensembles: s.plan.ensembles,
            schedule: s.plan.schedule.label(),
            predicted_cost: s.plan.predicted_cost,
            replications: s.replications,
            mean: s.mean,
            std: s.std,
            reference: s.reference,
            abs_error: s.bias,
            mse: s.mse,
            kernel_evals: s.kernel_evals,
        });
    }
    let target = target.unwrap_or(if has_reference {
        FitTarget::Error
    } else {
        FitTarget::PredictedCost
    });
    let log_x = axis != Axis::Horizon;
    let points = rows
        .iter()
        .map(|r| {
            let y = match target {
                FitTarget::Error => r.abs_error,
                FitTarget::Mse => r.mse,
                FitTarget::PredictedCost => Some(r.predicted_cost),
            }
            .ok_or_else(|| CliError::validation("fitting an error needs estimator.reference"))?;
            Ok((if log_x { r.value.ln() } else { r.value }, y))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let fit = fit_rate(&points)?;
    let csv = csv_string(&SWEEP_HEADER, &rows)?;
    Ok(SweepOutput {
        rows,
        summary: SweepSummary {
            axis,
            abscissa: if log_x { "ln(value)" } else { "value" },
            target,
            fit,
        },
        csv,
    })
}
