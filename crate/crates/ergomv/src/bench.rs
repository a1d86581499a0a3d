//! Built-in numerical checks: planner arithmetic, cost ledgers, fast-path
//! agreement, closed forms, and empirical rates on the linear model.

use ergomv_core::analysis::{
    chaos_error, discretisation_error, ergodic_mean_bias, fit_rate, gaussian_samples,
    invariant_moment, linear_mean, linear_variance, w2_1d, w2_decay,
};
use ergomv_core::dynamics::{fast_path_check, fast_path_check_self, simulate};
use ergomv_core::planner::{plan, theoretical_cost, Algorithm, EsSchedule, PlannerInput};
use ergomv_core::{
    DynamicsKind, InitialLaw, LinearModel, Observable, ParticleSchedule, SimulationConfig, TimeGrid,
};
use serde::Serialize;

use crate::error::CliResult;
use crate::io::csv_string;

pub const BENCH_HEADER: [&str; 4] = ["check_name", "expected", "observed", "pass"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub check_name: String,
    pub expected: String,
    pub observed: f64,
    pub pass: bool,
}

impl Check {
    fn close(name: &str, expected: f64, observed: f64, tol: f64) -> Self {
        Self {
            check_name: name.into(),
            expected: format!("{expected}"),
            observed,
            pass: (observed - expected).abs() <= tol * (1.0 + expected.abs()),
        }
    }

    fn within(name: &str, lo: f64, hi: f64, observed: f64) -> Self {
        Self {
            check_name: name.into(),
            expected: format!("[{lo};{hi}]"),
            observed,
            pass: (lo..=hi).contains(&observed),
        }
    }

    fn at_most(name: &str, bound: f64, observed: f64) -> Self {
        Self {
            check_name: name.into(),
            expected: format!("<={bound}"),
            observed,
            pass: observed <= bound,
        }
    }

    fn at_least(name: &str, bound: f64, observed: f64) -> Self {
        Self {
            check_name: name.into(),
            expected: format!(">={bound}"),
            observed,
            pass: observed >= bound,
        }
    }
}

/// Run every check. `quick` shrinks the Monte Carlo rate checks.
pub fn run_bench(quick: bool) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    planner_checks(&mut out)?;
    ledger_checks(&mut out)?;
    closed_form_checks(&mut out)?;
    rate_checks(quick, &mut out)?;
    Ok(out)
}

pub fn bench_csv(checks: &[Check]) -> CliResult<String> {
    csv_string(&BENCH_HEADER, checks)
}

fn planner_checks(out: &mut Vec<Check>) -> CliResult<()> {
    let ln10 = 10f64.ln();
    let mca = plan(&PlannerInput::new(Algorithm::Mca, 0.1, 1.0))?;
    out.push(Check::close("plan_mca_t", ln10, mca.t, 1e-12));
    out.push(Check::close("plan_mca_N", 100.0, mca.particles as f64, 0.0));
    out.push(Check::close("plan_mca_n", 10.0, mca.n as f64, 0.0));
    let aea = plan(&PlannerInput::new(Algorithm::Aea, 0.1, 1.0))?;
    out.push(Check::close("plan_aea_t", 10.0, aea.t, 1e-12));
    let caea = plan(&PlannerInput::new(Algorithm::CAea, 0.1, 1.0))?;
    out.push(Check::close(
        "plan_c_aea_M",
        (10.0 / ln10).ceil(),
        caea.ensembles as f64,
        0.0,
    ));
    out.push(Check::close(
        "cost_mca",
        200_000.0,
        theoretical_cost(Algorithm::Mca, 2.0, 10, 100, 1)?,
        0.0,
    ));
    out.push(Check::close(
        "cost_es_aea_harmonic",
        75.0,
        theoretical_cost(Algorithm::EsAea(EsSchedule::Harmonic), 2.0, 2, 3, 1)?,
        0.0,
    ));
    out.push(Check::close(
        "cost_es_aea_constant",
        10.0,
        theoretical_cost(Algorithm::EsAea(EsSchedule::Constant), 2.0, 2, 1, 1)?,
        0.0,
    ));
    Ok(())
}

fn ledger_checks(out: &mut Vec<Check>) -> CliResult<()> {
    let lin = LinearModel::new(1.0, 0.5)?;
    let model = lin.spec(InitialLaw::gaussian(vec![0.5], vec![1.0])?)?;
    let grid = TimeGrid::new(7, 1.3)?;
    let steps = (1.3f64 * 7.0).ceil() as u64;

    let ips = SimulationConfig::new(grid, 6, DynamicsKind::Ips, 3).with_ensembles(2);
    let (_, ledger) = simulate(&model, &ips, &mut [])?;
    out.push(Check::close(
        "ledger_ips_naive",
        (2 * steps * 36) as f64,
        ledger.kernel_evals as f64,
        0.0,
    ));

    let schedule = ParticleSchedule::harmonic(2, 7);
    let sc =
        SimulationConfig::new(grid, 2, DynamicsKind::SelfInteracting, 3).with_schedule(schedule);
    let (_, ledger) = simulate(&model, &sc, &mut [])?;
    // N_k = round(14 / k), at least 1
    let expected: u64 = (1..=steps)
        .map(|k| {
            let nk = ((14.0 / k as f64).round() as u64).max(1);
            nk * nk * k
        })
        .sum();
    out.push(Check::close(
        "ledger_self_naive",
        expected as f64,
        ledger.kernel_evals as f64,
        0.0,
    ));

    out.push(Check::at_most(
        "fast_path_ips",
        1e-10,
        fast_path_check(&model, &grid, 16, 9)?,
    ));
    out.push(Check::at_most(
        "fast_path_self",
        1e-10,
        fast_path_check_self(&model, &grid, schedule, 9)?,
    ));
    Ok(())
}

fn closed_form_checks(out: &mut Vec<Check>) -> CliResult<()> {
    out.push(Check::close(
        "linear_mean",
        (-1f64).exp(),
        linear_mean(1.0, 0.5, 1.0, 2.0)?,
        1e-15,
    ));
    out.push(Check::close(
        "linear_variance_fixed_point",
        0.5,
        linear_variance(1.0, 0.5, 3.0),
        1e-15,
    ));
    out.push(Check::close(
        "invariant_second_moment",
        0.25,
        invariant_moment(2.0, 0.0, 2)?,
        0.0,
    ));
    out.push(Check::close(
        "w2_pairs",
        1.0,
        w2_1d(&[0.0, 2.0], &[1.0, 3.0])?,
        1e-15,
    ));
    let ratio = ergodic_mean_bias(1.0, 0.5, 1.0, 10.0)? / ergodic_mean_bias(1.0, 0.5, 1.0, 20.0)?;
    out.push(Check::within("ergodic_bias_halving", 1.0, 4.0, ratio));
    Ok(())
}

fn rate_checks(quick: bool, out: &mut Vec<Check>) -> CliResult<()> {
    let lin = LinearModel::new(1.0, 0.5)?;
    let point = InitialLaw::point(vec![1.0])?;

    let (particles, reps) = if quick { (512, 2) } else { (512, 8) };
    let target = gaussian_samples(0.0, 0.5, 10_000, 1);
    let times: Vec<f64> = (1..=10).map(|i| 0.5 * i as f64).collect();
    let (_, fit) = w2_decay(
        &lin.spec(point.clone())?,
        50,
        &times,
        particles,
        reps,
        2,
        &target,
    )?;
    out.push(Check::at_most("w2_decay_slope", -0.25, fit.slope));
    out.push(Check::at_least("w2_decay_r2", 0.85, fit.r2));

    let (counts, reps): (&[usize], usize) = if quick {
        (&[8, 16, 32, 64], 200)
    } else {
        (&[8, 16, 32, 64, 128, 256], 200)
    };
    let grid = TimeGrid::new(50, 3.0)?;
    let pts = chaos_error(
        &lin,
        &point,
        &grid,
        counts,
        reps,
        3,
        &Observable::SquaredNorm,
    )?;
    let strong: Vec<(f64, f64)> = pts
        .iter()
        .map(|p| ((p.particles as f64).ln(), p.strong_error))
        .collect();
    let weak: Vec<(f64, f64)> = pts
        .iter()
        .map(|p| ((p.particles as f64).ln(), p.weak_bias.abs()))
        .collect();
    out.push(Check::within(
        "chaos_strong_slope",
        -0.65,
        -0.35,
        fit_rate(&strong)?.slope,
    ));
    out.push(Check::within(
        "chaos_weak_slope",
        -1.4,
        -0.6,
        fit_rate(&weak)?.slope,
    ));

    let free = LinearModel::new(1.0, 0.0)?;
    let errs = discretisation_error(&free, 1.0, 1.0, &[4, 8, 16, 32], 8, 4)?;
    let pts: Vec<(f64, f64)> = errs.iter().map(|&(n, e)| ((n as f64).ln(), e)).collect();
    out.push(Check::within(
        "euler_weak_slope",
        -1.3,
        -0.7,
        fit_rate(&pts)?.slope,
    ));

    Ok(())
}
