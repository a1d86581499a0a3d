use ergomv_core::analysis::{
    chaos_error, discretisation_error, ergodic_mean_bias, estimate_mse, fit_rate, linear_mean,
    linear_variance, w2_1d, AnalyticReference,
};
use ergomv_core::dynamics::TimeGrid;
use ergomv_core::experiment::Experiment;
use ergomv_core::model::{sample_initial, zero_model, InitialLaw, LinearModel, Observable};
use ergomv_core::planner::{Algorithm, ParameterPlan};
use ergomv_core::rng::{RngStream, StreamId};
use proptest::prelude::*;

/// Classical RK4 for `dm/dt = -(α-β) m`, `dv/dt = -2α v + 1`.
fn rk4_moments(
    alpha: f64,
    beta: f64,
    m0: f64,
    v0: f64,
    t_end: f64,
    h: f64,
) -> Vec<(f64, f64, f64)> {
    let rhs = |m: f64, v: f64| (-(alpha - beta) * m, -2.0 * alpha * v + 1.0);
    let steps = (t_end / h).round() as usize;
    let mut out = vec![(0.0, m0, v0)];
    let (mut m, mut v) = (m0, v0);
    for k in 0..steps {
        let (a1, b1) = rhs(m, v);
        let (a2, b2) = rhs(m + 0.5 * h * a1, v + 0.5 * h * b1);
        let (a3, b3) = rhs(m + 0.5 * h * a2, v + 0.5 * h * b2);
        let (a4, b4) = rhs(m + h * a3, v + h * b3);
        m += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        v += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        if (k + 1) % 1000 == 0 {
            out.push(((k + 1) as f64 * h, m, v));
        }
    }
    out
}

#[test]
fn closed_form_moments_match_ode_integration() {
    for (alpha, beta, m0, v0) in [
        (1.0, 0.5, 1.0, 0.0),
        (2.0, 0.0, 3.0, 1.5),
        (0.7, -1.0, -2.0, 0.2),
    ] {
        for (t, m, v) in rk4_moments(alpha, beta, m0, v0, 10.0, 1e-4) {
            assert!(
                (linear_mean(alpha, beta, m0, t).unwrap() - m).abs() < 1e-6,
                "mean at {t}"
            );
            assert!(
                (linear_variance(alpha, v0, t) - v).abs() < 1e-6,
                "variance at {t}"
            );
        }
    }
    let tail = rk4_moments(1.0, 0.5, 1.0, 0.0, 20.0, 1e-4);
    let (_, _, v) = *tail.last().unwrap();
    assert!((linear_variance(1.0, 0.0, 20.0) - 0.5).abs() < 1e-8);
    assert!((v - 0.5).abs() < 1e-8);
    let (_, m, _) = *rk4_moments(1.0, 0.5, 1.0, 0.0, 2.0, 1e-4).last().unwrap();
    assert!((m - 0.367879).abs() < 1e-6);
}

#[test]
fn analytic_reference_tends_to_the_invariant_law() {
    let lin = LinearModel::new(1.5, 0.5).unwrap();
    let r = AnalyticReference::new(&lin, 2.0, 3.0);
    assert!(r.mean(40.0).abs() < 1e-15);
    assert!((r.variance(40.0) - 1.0 / 3.0).abs() < 1e-15);
    assert!((r.second_moment(0.0) - 7.0).abs() < 1e-15);
}

#[test]
fn ergodic_bias_is_order_inverse_time() {
    for t in [5.0, 8.0, 12.0, 20.0] {
        let ratio = ergodic_mean_bias(1.0, 0.5, 1.0, t).unwrap()
            / ergodic_mean_bias(1.0, 0.5, 1.0, 2.0 * t).unwrap();
        assert!((1.0..=4.0).contains(&ratio), "t={t}: ratio {ratio}");
        let scaled = t * ergodic_mean_bias(1.0, 0.5, 1.0, t).unwrap();
        assert!((scaled - 2.0).abs() < 2.0, "t·bias = {scaled}");
    }
}

#[test]
fn sample_initial_examples() {
    let mut rng = RngStream::new(1, StreamId::new(0, 0));
    let pts = sample_initial(&InitialLaw::point(vec![1.5]).unwrap(), 3, &mut rng).unwrap();
    assert_eq!(pts, vec![vec![1.5]; 3]);
    let pts = sample_initial(
        &InitialLaw::gaussian(vec![0.0], vec![0.0]).unwrap(),
        2,
        &mut rng,
    )
    .unwrap();
    assert_eq!(pts, vec![vec![0.0]; 2]);
    let n = 100_000;
    let pts = sample_initial(
        &InitialLaw::gaussian(vec![0.0], vec![1.0]).unwrap(),
        n,
        &mut rng,
    )
    .unwrap();
    let mean = pts.iter().map(|p| p[0]).sum::<f64>() / n as f64;
    assert!(mean.abs() < 0.02);
    let mut a = RngStream::new(5, StreamId::new(2, 3));
    let mut b = RngStream::new(5, StreamId::new(2, 3));
    let law = InitialLaw::gaussian(vec![1.0, 2.0], vec![2.0, 0.5, 0.5, 1.0]).unwrap();
    assert_eq!(
        sample_initial(&law, 20, &mut a).unwrap(),
        sample_initial(&law, 20, &mut b).unwrap()
    );
}

#[test]
fn mse_examples() {
    let zero = zero_model(1, InitialLaw::point(vec![0.3]).unwrap()).unwrap();
    let plan = ParameterPlan::from_parameters(Algorithm::Aea, 1.0, 4, 3, 1).unwrap();
    let exp = Experiment::new(zero, plan, Observable::Coordinate(0));
    assert_eq!(estimate_mse(&exp, 0.3, 4).unwrap().mse, 0.0);
    assert_eq!(estimate_mse(&exp, 1.3, 4).unwrap().mse, 1.0);
    assert!(estimate_mse(&exp, 0.3, 1).is_err());
}

#[test]
fn discretisation_error_is_first_order() {
    let lin = LinearModel::new(1.0, 0.5).unwrap();
    let errs = discretisation_error(&lin, 1.0, 1.0, &[4, 8, 16, 32], 8, 3).unwrap();
    let pts: Vec<(f64, f64)> = errs.iter().map(|&(n, e)| ((n as f64).ln(), e)).collect();
    let fit = fit_rate(&pts).unwrap();
    assert!((-1.3..=-0.8).contains(&fit.slope), "slope {}", fit.slope);
}

#[test]
fn independent_particles_have_no_weak_bias_for_the_mean() {
    let lin = LinearModel::new(1.0, 0.0).unwrap();
    let grid = TimeGrid::new(10, 1.0).unwrap();
    let law = InitialLaw::gaussian(vec![0.5], vec![0.25]).unwrap();
    let pts = chaos_error(
        &lin,
        &law,
        &grid,
        &[2, 8, 32],
        8,
        17,
        &Observable::Coordinate(0),
    )
    .unwrap();
    for p in pts {
        assert!(p.weak_bias.abs() <= 3.0 * p.weak_stderr + 1e-12, "{p:?}");
        // without interaction every particle equals its reference counterpart
        assert!(p.strong_error < 1e-12, "{p:?}");
    }
}

#[test]
fn chaos_error_validates_arguments() {
    let lin = LinearModel::new(1.0, 0.5).unwrap();
    let grid = TimeGrid::new(4, 1.0).unwrap();
    let law = InitialLaw::point(vec![0.0]).unwrap();
    assert!(chaos_error(&lin, &law, &grid, &[2], 3, 0, &Observable::SquaredNorm).is_err());
    assert!(chaos_error(&lin, &law, &grid, &[0], 2, 0, &Observable::SquaredNorm).is_err());
}

/// Minimum over all bijections between two equal-size samples.
fn brute_force_w2(a: &[f64], b: &[f64]) -> f64 {
    fn permute(idx: &mut Vec<usize>, k: usize, a: &[f64], b: &[f64], best: &mut f64) {
        if k == idx.len() {
            let cost: f64 = idx
                .iter()
                .enumerate()
                .map(|(i, &j)| (a[i] - b[j]).powi(2))
                .sum();
            *best = best.min(cost);
            return;
        }
        for s in k..idx.len() {
            idx.swap(k, s);
            permute(idx, k + 1, a, b, best);
            idx.swap(k, s);
        }
    }
    let mut best = f64::INFINITY;
    permute(&mut (0..a.len()).collect(), 0, a, b, &mut best);
    (best / a.len() as f64).sqrt()
}

fn pair(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..=max).prop_flat_map(|n| {
        (
            proptest::collection::vec(-10.0f64..10.0, n),
            proptest::collection::vec(-10.0f64..10.0, n),
        )
    })
}

proptest! {
    #[test]
    fn w2_equals_exhaustive_assignment((a, b) in pair(6)) {
        let fast = w2_1d(&a, &b).unwrap();
        let brute = brute_force_w2(&a, &b);
        prop_assert!((fast - brute).abs() <= 1e-12 * (1.0 + brute));
    }

    #[test]
    fn w2_is_a_metric(n in 1usize..40, seed in any::<u64>()) {
        let mut s = RngStream::new(seed, StreamId::new(0, 0));
        let mut draw = || (0..n).map(|_| 2.0 * s.normal()).collect::<Vec<f64>>();
        let (a, b, c) = (draw(), draw(), draw());
        prop_assert_eq!(w2_1d(&a, &b).unwrap(), w2_1d(&b, &a).unwrap());
        prop_assert_eq!(w2_1d(&a, &a).unwrap(), 0.0);
        let mut shuffled = a.clone();
        shuffled.reverse();
        prop_assert_eq!(w2_1d(&a, &shuffled).unwrap(), 0.0);
        prop_assert!(w2_1d(&a, &b).unwrap() > 0.0);
        prop_assert!(w2_1d(&a, &c).unwrap() <= w2_1d(&a, &b).unwrap() + w2_1d(&b, &c).unwrap() + 1e-9);
    }
}
