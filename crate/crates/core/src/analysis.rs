//! Reference values for the linear model, empirical Wasserstein-2 distance in
//! one dimension, mean-square-error summaries and log-linear rate fits.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dynamics::{run_ensemble, Evaluation, SimulationConfig, TimeGrid};
use crate::error::{config, precondition, Result};
use crate::experiment::{replication_seed, Experiment};
use crate::model::{InitialLaw, LinearModel, ModelSpec, Observable};
use crate::numeric::{exact_sum, least_squares, mean, sample_variance};
use crate::planner::{Algorithm, ParameterPlan};
use crate::rng::{RngStream, StreamId};

fn check_contractive(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha > beta) {
        return Err(config("linear model requires alpha > 0 and alpha > beta"));
    }
    Ok(())
}

/// Mean of the linear McKean-Vlasov SDE: `m0 e^{-(α-β)t}`.
pub fn linear_mean(alpha: f64, beta: f64, m0: f64, t: f64) -> Result<f64> {
    check_contractive(alpha, beta)?;
    Ok(m0 * libm::exp(-(alpha - beta) * t))
}

/// Variance of the linear SDE with unit noise: `1/(2α) + (v0 - 1/(2α)) e^{-2αt}`.
pub fn linear_variance(alpha: f64, v0: f64, t: f64) -> f64 {
    let fixed = 0.5 / alpha;
    fixed + (v0 - fixed) * libm::exp(-2.0 * alpha * t)
}

/// First or second moment of the invariant law `N(0, 1/(2α))`.
pub fn invariant_moment(alpha: f64, beta: f64, order: u32) -> Result<f64> {
    check_contractive(alpha, beta)?;
    match order {
        1 => Ok(0.0),
        2 => Ok(0.5 / alpha),
        _ => Err(config("only moments of order 1 and 2 are available")),
    }
}

/// `|m(t) - (1/t) ∫_0^t m(s) ds|` for the linear model, in closed form.
pub fn ergodic_mean_bias(alpha: f64, beta: f64, m0: f64, t: f64) -> Result<f64> {
    check_contractive(alpha, beta)?;
    if t <= 0.0 {
        return Err(precondition("time must be positive"));
    }
    let a = alpha - beta;
    let integral = m0 * (1.0 - libm::exp(-a * t)) / a;
    Ok((linear_mean(alpha, beta, m0, t)? - integral / t).abs())
}

/// Moments of one coordinate of the linear model, exact and Euler-discretised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticReference {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub m0: f64,
    pub v0: f64,
}

impl AnalyticReference {
    pub fn new(model: &LinearModel, m0: f64, v0: f64) -> Self {
        Self {
            alpha: model.alpha,
            beta: model.beta,
            sigma: model.sigma,
            m0,
            v0,
        }
    }

    pub fn mean(&self, t: f64) -> f64 {
        self.m0 * libm::exp(-(self.alpha - self.beta) * t)
    }

    pub fn variance(&self, t: f64) -> f64 {
        let fixed = self.sigma * self.sigma * 0.5 / self.alpha;
        fixed + (self.v0 - fixed) * libm::exp(-2.0 * self.alpha * t)
    }

    pub fn second_moment(&self, t: f64) -> f64 {
        let m = self.mean(t);
        self.variance(t) + m * m
    }

    pub fn invariant_variance(&self) -> f64 {
        self.sigma * self.sigma * 0.5 / self.alpha
    }

    /// Mean of the Euler-discretised limit after `k` steps of size `h`.
    pub fn discrete_mean(&self, k: usize, h: f64) -> f64 {
        self.m0 * libm::pow(1.0 - (self.alpha - self.beta) * h, k as f64)
    }

    /// Variance of the Euler-discretised limit after `k` steps of size `h`.
    pub fn discrete_variance(&self, k: usize, h: f64) -> f64 {
        let a = (1.0 - self.alpha * h) * (1.0 - self.alpha * h);
        let mut v = self.v0;
        for _ in 0..k {
            v = a * v + self.sigma * self.sigma * h;
        }
        v
    }
}

/// Quantile of sorted data at level `p` by linear interpolation between order
/// statistics placed at levels `(i + 0.5) / len`.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = (p * sorted.len() as f64 - 0.5).clamp(0.0, (sorted.len() - 1) as f64);
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let w = pos - lo as f64;
    if w == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(crate::error::Error::Numeric("NaN in sample".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Wasserstein-2 distance between two one-dimensional empirical measures.
///
/// Equal sizes use the monotone coupling of order statistics. Unequal sizes
/// compare both quantile functions at the levels `(i + 0.5) / L`, `L` the larger
/// size.
pub fn w2_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(precondition("w2_1d needs two non-empty samples"));
    }
    let (sa, sb) = (sorted(a)?, sorted(b)?);
    let len = sa.len().max(sb.len());
    let mut sq = Vec::with_capacity(len);
    if sa.len() == sb.len() {
        sq.extend(sa.iter().zip(&sb).map(|(x, y)| (x - y) * (x - y)));
    } else {
        for i in 0..len {
            let p = (i as f64 + 0.5) / len as f64;
            let d = quantile(&sa, p) - quantile(&sb, p);
            sq.push(d * d);
        }
    }
    Ok(libm::sqrt(exact_sum(&sq) / len as f64))
}

/// Root mean squared error of replicated estimates around a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseReport {
    pub replications: usize,
    pub estimates: Vec<f64>,
    pub reference: f64,
    pub mean: f64,
    /// `|mean - reference|`.
    pub bias: f64,
    /// Unbiased sample variance of the estimates.
    pub variance: f64,
    pub std: f64,
    /// `sqrt(mean((estimate - reference)²))`.
    pub mse: f64,
}

impl MseReport {
    pub fn new(estimates: Vec<f64>, reference: f64) -> Result<Self> {
        if estimates.len() < 2 {
            return Err(precondition("mse needs at least two replications"));
        }
        let r = estimates.len();
        let m = mean(&estimates);
        let variance = sample_variance(&estimates);
        let sq: Vec<f64> = estimates
            .iter()
            .map(|e| (e - reference) * (e - reference))
            .collect();
        let mse = libm::sqrt(exact_sum(&sq) / r as f64);
        Ok(Self {
            replications: r,
            reference,
            mean: m,
            bias: (m - reference).abs(),
            variance,
            std: libm::sqrt(variance),
            mse,
            estimates,
        })
    }
}

/// Run `replications` seeded replications of an experiment in order.
pub fn estimate_mse(exp: &Experiment, reference: f64, replications: usize) -> Result<MseReport> {
    if replications < 2 {
        return Err(precondition("mse needs at least two replications"));
    }
    let estimates = (0..replications as u64)
        .map(|r| exp.run_replication(r).map(|res| res.estimate))
        .collect::<Result<Vec<_>>>()?;
    MseReport::new(estimates, reference)
}

/// Least-squares line through `(x, ln error)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub abscissae: Vec<f64>,
    pub ordinates: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl RateFit {
    /// Decay rate `-slope`; for errors against time this is an estimate of λ.
    pub fn rate(&self) -> f64 {
        -self.slope
    }
}

/// Fit `ln(error) = intercept + slope x`. Callers log-scale `x` when fitting
/// power laws.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(precondition("rate fit needs at least three points"));
    }
    if points
        .iter()
        .any(|&(x, e)| !e.is_finite() || e <= 0.0 || !x.is_finite())
    {
        return Err(precondition(
            "rate fit needs finite abscissae and positive finite errors",
        ));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| libm::log(p.1)).collect();
    let (slope, intercept, r2) = least_squares(&xs, &ys);
    Ok(RateFit {
        abscissae: xs,
        ordinates: ys,
        slope,
        intercept,
        r2,
    })
}

/// Propagation-of-chaos errors at one particle count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChaosPoint {
    pub particles: usize,
    /// RMS distance to the coupled reference system, over particles and replications.
    pub strong_error: f64,
    /// Mean of `(1/N) Σ_i f(x_i) - f(x̃_i)` with `x̃_i` the coupled limit particle.
    pub weak_bias: f64,
    /// Standard error of `weak_bias`, from antithetic-pair averages.
    pub weak_stderr: f64,
}

/// Strong and weak propagation-of-chaos errors of the linear interacting
/// particle system at time `grid.horizon()`.
///
/// Replications come in antithetic pairs sharing a seed. In each one, the
/// systems of every size in `particle_counts` and a reference system of
/// `8 max(N)` particles are driven by the same per-particle streams. The strong
/// error compares particle `i < N` with particle `i` of the reference. The weak
/// bias compares `f` against the Euler-discretised limit process `x̃_i`, whose
/// drift uses the deterministic limit mean and whose noise is particle `i`'s
/// stream, so both terms share their leading fluctuations.
pub fn chaos_error(
    model: &LinearModel,
    initial: &InitialLaw,
    grid: &TimeGrid,
    particle_counts: &[usize],
    replications: usize,
    seed: u64,
    f: &Observable,
) -> Result<Vec<ChaosPoint>> {
    if replications < 2 || !replications.is_multiple_of(2) {
        return Err(precondition(
            "chaos_error needs an even number of replications (antithetic pairs)",
        ));
    }
    if particle_counts.is_empty() || particle_counts.contains(&0) {
        return Err(precondition("particle counts must be positive"));
    }
    let spec = model.spec(initial.clone())?;
    let d = spec.dim();
    let n_ref = 8 * particle_counts.iter().copied().max().unwrap_or(1);
    let steps = grid.steps();
    let h = grid.step_size();
    let sqrt_h = libm::sqrt(h);
    let m_init = initial.mean();
    let contraction = 1.0 - (model.alpha - model.beta) * h;

    let mut strong = vec![0.0; particle_counts.len()];
    let mut weak: Vec<Vec<f64>> = vec![Vec::with_capacity(replications); particle_counts.len()];
    for r in 0..replications as u64 {
        let (s, mirror) = replication_seed(seed, r, true);
        let cfg = |count: usize| {
            SimulationConfig::new(*grid, count, crate::dynamics::DynamicsKind::Ips, s)
                .with_evaluation(Evaluation::Fast)
                .with_antithetic(mirror)
        };
        let (reference, _) = run_ensemble(&spec, &cfg(n_ref), 0, &mut |_| {})?;

        // coupled limit particles, replaying each particle's stream
        let coupled_len = particle_counts.iter().copied().max().unwrap_or(1);
        let mut coupled = vec![0.0; coupled_len * d];
        for (i, x) in coupled.chunks_exact_mut(d).enumerate() {
            let mut stream = RngStream::new(s, StreamId::new(0, i)).antithetic(mirror);
            initial.sample_into(&mut stream, x);
            let mut m = m_init.clone();
            for _ in 0..steps {
                for c in 0..d {
                    let drift = -model.alpha * x[c] + model.beta * m[c];
                    x[c] += drift * h + model.sigma * sqrt_h * stream.normal();
                }
                m.iter_mut().for_each(|v| *v *= contraction);
            }
        }

        for (slot, &count) in particle_counts.iter().enumerate() {
            let (state, _) = run_ensemble(&spec, &cfg(count), 0, &mut |_| {})?;
            let mut sq = Vec::with_capacity(count);
            let mut diff = Vec::with_capacity(count);
            for i in 0..count {
                let x = state.particle(i);
                let y = reference.particle(i);
                sq.push(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
                diff.push(f.value(x) - f.value(&coupled[i * d..(i + 1) * d]));
            }
            strong[slot] += exact_sum(&sq);
            weak[slot].push(exact_sum(&diff) / count as f64);
        }
    }

    Ok(particle_counts
        .iter()
        .enumerate()
        .map(|(slot, &count)| {
            let pairs: Vec<f64> = weak[slot]
                .chunks_exact(2)
                .map(|p| 0.5 * (p[0] + p[1]))
                .collect();
            ChaosPoint {
                particles: count,
                strong_error: libm::sqrt(strong[slot] / (replications * count) as f64),
                weak_bias: mean(&weak[slot]),
                weak_stderr: libm::sqrt(sample_variance(&pairs) / pairs.len() as f64),
            }
        })
        .collect())
}

/// Error of the antithetic-pair Monte Carlo mean at time `t` against the exact
/// linear mean, for each step count `n`.
///
/// For the linear model with a point initial condition the pair average equals
/// the Euler-discretised mean exactly, so the error isolates the time
/// discretisation.
pub fn discretisation_error(
    model: &LinearModel,
    x0: f64,
    t: f64,
    steps_per_unit: &[usize],
    particles: usize,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    let spec = model.spec(InitialLaw::point(vec![x0; model.dim])?)?;
    let exact = linear_mean(model.alpha, model.beta, x0, t)?;
    steps_per_unit
        .iter()
        .map(|&n| {
            let plan = ParameterPlan::from_parameters(Algorithm::Mca, t, n, particles, 1)?;
            let exp = Experiment::new(spec.clone(), plan, Observable::Coordinate(0))
                .with_seed(seed)
                .with_antithetic(true);
            let a = exp.run_replication(0)?.estimate;
            let b = exp.run_replication(1)?.estimate;
            Ok((n, (0.5 * (a + b) - exact).abs()))
        })
        .collect()
}

/// `count` independent `N(mean, variance)` draws from a dedicated stream.
pub fn gaussian_samples(mean: f64, variance: f64, count: usize, seed: u64) -> Vec<f64> {
    let mut s = RngStream::new(seed, StreamId::new(u32::MAX as usize, 0));
    let sd = libm::sqrt(variance);
    (0..count).map(|_| mean + sd * s.normal()).collect()
}

/// W2 distance between the first coordinate of an interacting particle cloud
/// at each of `times` and a sample from the target law, with a fitted decay
/// rate in `t`.
///
/// Particle samples are pooled over `replications` independent systems seeded
/// `seed + r`.
pub fn w2_decay(
    model: &ModelSpec,
    n: usize,
    times: &[f64],
    particles: usize,
    replications: usize,
    seed: u64,
    target: &[f64],
) -> Result<(Vec<(f64, f64)>, RateFit)> {
    if replications == 0 {
        return Err(precondition("w2_decay needs at least one replication"));
    }
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let grid = TimeGrid::new(n, horizon)?;
    let wanted: Vec<usize> = times
        .iter()
        .map(|&t| libm::round(t * n as f64) as usize)
        .collect();
    let evaluation = if model.fast_drift().is_some() {
        Evaluation::Fast
    } else {
        Evaluation::Naive
    };
    let mut samples: Vec<Vec<f64>> =
        vec![Vec::with_capacity(particles * replications); wanted.len()];
    for r in 0..replications as u64 {
        let cfg = SimulationConfig::new(
            grid,
            particles,
            crate::dynamics::DynamicsKind::Ips,
            seed.wrapping_add(r),
        )
        .with_evaluation(evaluation);
        run_ensemble(model, &cfg, 0, &mut |s| {
            for (slot, &k) in wanted.iter().enumerate() {
                if k == s.step() {
                    samples[slot].extend(s.positions().chunks_exact(s.dim()).map(|x| x[0]));
                }
            }
        })?;
    }
    let mut points = Vec::with_capacity(times.len());
    for (&t, sample) in times.iter().zip(samples) {
        if sample.is_empty() {
            return Err(precondition("requested time not on the grid"));
        }
        points.push((t, w2_1d(&sample, target)?));
    }
    let fit = fit_rate(&points)?;
    Ok((points, fit))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_moment_examples() {
        assert!((linear_mean(1.0, 0.5, 1.0, 2.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(linear_mean(1.0, 0.5, 0.0, 3.7).unwrap(), 0.0);
        assert_eq!(linear_mean(2.0, 0.0, 3.0, 0.0).unwrap(), 3.0);
        assert!(linear_mean(1.0, 1.0, 1.0, 1.0).is_err());
        assert_eq!(linear_variance(1.0, 0.5, 4.2), 0.5);
        assert_eq!(linear_variance(1.0, 0.0, 0.0), 0.0);
        assert_eq!(invariant_moment(1.0, 0.5, 1).unwrap(), 0.0);
        assert_eq!(invariant_moment(1.0, 0.5, 2).unwrap(), 0.5);
        assert_eq!(invariant_moment(2.0, 0.0, 2).unwrap(), 0.25);
        assert!(invariant_moment(0.5, 1.0, 2).is_err());
    }

    #[test]
    fn w2_examples() {
        assert_eq!(w2_1d(&[0.3, -1.0, 2.0], &[2.0, 0.3, -1.0]).unwrap(), 0.0);
        assert_eq!(w2_1d(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(w2_1d(&[0.0, 2.0], &[1.0, 3.0]).unwrap(), 1.0);
        assert!(w2_1d(&[], &[1.0]).is_err());
    }

    #[test]
    fn w2_unequal_sizes_use_quantiles() {
        // the two-point law {0, 1} against itself resampled to four points
        let d = w2_1d(&[0.0, 1.0], &[0.0, 0.0, 1.0, 1.0]).unwrap();
        // quantiles of {0,1} at 1/8, 3/8, 5/8, 7/8: 0, 0.25, 0.75, 1
        let expect = ((0.25f64 * 0.25 + 0.25 * 0.25) / 4.0).sqrt();
        assert!((d - expect).abs() < 1e-15);
    }

    #[test]
    fn fit_rate_examples() {
        let pts: Vec<(f64, f64)> = [1.0f64, 2.0, 3.0]
            .iter()
            .map(|&t| (t, (-2.0 * t).exp()))
            .collect();
        let fit = fit_rate(&pts).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12 && (fit.r2 - 1.0).abs() < 1e-12);

        let pts: Vec<(f64, f64)> = [8.0f64, 16.0, 32.0, 64.0]
            .iter()
            .map(|&n| (n.ln(), n.powf(-0.5)))
            .collect();
        assert!((fit_rate(&pts).unwrap().slope + 0.5).abs() < 1e-12);

        let flat = fit_rate(&[(1.0, 0.3), (2.0, 0.3), (5.0, 0.3)]).unwrap();
        assert!(flat.slope.abs() < 1e-15 && flat.r2 == 1.0);

        assert!(fit_rate(&[(1.0, 0.1), (2.0, 0.0), (3.0, 0.1)]).is_err());
        assert!(fit_rate(&[(1.0, 0.1), (2.0, 0.1)]).is_err());
    }

    #[test]
    fn mse_report_identities() {
        let rep = MseReport::new(vec![0.4, 0.7, 0.1, 0.55], 0.5).unwrap();
        let r = rep.replications as f64;
        let lhs = rep.mse * rep.mse;
        let rhs = rep.bias * rep.bias + rep.variance * (r - 1.0) / r;
        assert!((lhs - rhs).abs() < 1e-12);
        assert!(rep.mse >= rep.bias);
        assert!(MseReport::new(vec![1.0], 1.0).is_err());

        let shifted = MseReport::new(vec![2.0, 2.0, 2.0], 1.0).unwrap();
        assert_eq!(shifted.mse, 1.0);
    }

    #[test]
    fn discrete_moments_follow_the_euler_recursion() {
        let lin = LinearModel::new(1.0, 0.5).unwrap();
        let r = AnalyticReference::new(&lin, 2.0, 0.0);
        let h = 0.1;
        assert!((r.discrete_mean(3, h) - 2.0 * 0.95f64.powi(3)).abs() < 1e-15);
        let v1 = r.discrete_variance(1, h);
        assert!((v1 - h).abs() < 1e-15);
        assert!((r.discrete_variance(2, h) - (0.81 * h + h)).abs() < 1e-15);
        // fixed point of the discrete recursion is σ²h / (1 - (1-αh)²)
        let fixed = h / (1.0 - 0.81);
        assert!((r.discrete_variance(2000, h) - fixed).abs() < 1e-12);
    }

    #[test]
    fn ergodic_bias_decays_like_inverse_time() {
        let b5 = ergodic_mean_bias(1.0, 0.5, 1.0, 5.0).unwrap();
        let b10 = ergodic_mean_bias(1.0, 0.5, 1.0, 10.0).unwrap();
        let ratio = b5 / b10;
        assert!((1.0..=4.0).contains(&ratio), "ratio {ratio}");
    }
}
