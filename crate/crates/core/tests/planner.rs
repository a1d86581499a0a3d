use ergomv_core::dynamics::{simulate, Evaluation};
use ergomv_core::model::{InitialLaw, LinearModel};
use ergomv_core::planner::{
    asymptotic_cost_order, consistency_check, plan, theoretical_cost, Algorithm, EsSchedule,
    ParameterPlan, PlannerInput,
};
use proptest::prelude::*;

#[test]
fn cost_ratio_to_leading_order_stays_bounded() {
    for lambda in [0.5, 1.0, 2.0] {
        for alg in Algorithm::ALL {
            for eps in [0.2, 0.1, 0.05, 0.02] {
                let p = plan(&PlannerInput::new(alg, eps, lambda)).unwrap();
                let ratio = p.predicted_cost / asymptotic_cost_order(alg, eps, lambda);
                assert!(
                    (0.1..=10.0).contains(&ratio),
                    "{alg} eps={eps} lambda={lambda}: {ratio}"
                );
            }
        }
    }
}

#[test]
fn predicted_cost_equals_theoretical_cost() {
    for alg in Algorithm::ALL {
        let p = plan(&PlannerInput::new(alg, 0.1, 1.0)).unwrap();
        let c = theoretical_cost(alg, p.t, p.n, p.particles, p.ensembles).unwrap();
        assert_eq!(p.predicted_cost, c);
        assert!(p.t > 0.0 && p.n > 0 && p.particles > 0 && p.ensembles > 0);
        if !matches!(alg, Algorithm::CAea | Algorithm::CsAea) {
            assert_eq!(p.ensembles, 1);
        }
    }
}

#[test]
fn self_interacting_plans() {
    let h = plan(&PlannerInput::new(
        Algorithm::EsAea(EsSchedule::Harmonic),
        0.1,
        1.0,
    ))
    .unwrap();
    assert!((h.t - 10f64.ln()).abs() < 1e-12);
    assert_eq!(h.n, 10);
    assert_eq!(h.particles, (100.0 / 10f64.ln()).ceil() as usize);
    let c = plan(&PlannerInput::new(
        Algorithm::EsAea(EsSchedule::Constant),
        0.1,
        1.0,
    ))
    .unwrap();
    assert!((c.t - 100.0).abs() < 1e-9);
    assert_eq!((c.n, c.particles), (10, 1));
    let cs = plan(&PlannerInput::new(Algorithm::CsAea, 0.1, 1.0)).unwrap();
    assert_eq!(cs.particles, 1);
    assert_eq!(cs.ensembles, (100.0 / 10f64.ln()).ceil() as usize);
}

#[test]
fn cost_constant_scales_allocations() {
    let base = plan(&PlannerInput::new(Algorithm::Aea, 0.1, 1.0)).unwrap();
    let big = plan(&PlannerInput::new(Algorithm::Aea, 0.1, 1.0).with_cost_constant(2.0)).unwrap();
    assert!((big.t - 2.0 * base.t).abs() < 1e-12);
    assert_eq!((big.n, big.particles), (20, 20));
    assert!(plan(&PlannerInput::new(Algorithm::Aea, 0.1, 1.0).with_cost_constant(0.0)).is_err());
}

#[test]
fn consistency_check_examples() {
    let model = LinearModel::new(1.0, 0.5)
        .unwrap()
        .spec(InitialLaw::point(vec![1.0]).unwrap())
        .unwrap();

    let p = ParameterPlan::from_parameters(Algorithm::Mca, 1.0, 4, 5, 1).unwrap();
    let (_, ledger) = simulate(
        &model,
        &p.simulation_config(3, Evaluation::Naive).unwrap(),
        &mut [],
    )
    .unwrap();
    let report = consistency_check(&p, &ledger, Evaluation::Naive).unwrap();
    assert_eq!(report.observed_kernel_evals, 100);
    assert_eq!(report.expected_kernel_evals, 100);
    assert_eq!(report.theoretical_cost, 100.0);
    assert!(report.matches);

    let (_, fast) = simulate(
        &model,
        &p.simulation_config(3, Evaluation::Fast).unwrap(),
        &mut [],
    )
    .unwrap();
    let report = consistency_check(&p, &fast, Evaluation::Fast).unwrap();
    assert!(!report.matches && report.ratio < 1.0);

    let p = ParameterPlan::from_parameters(Algorithm::EsAea(EsSchedule::Constant), 1.0, 3, 2, 1)
        .unwrap();
    let (_, ledger) = simulate(
        &model,
        &p.simulation_config(0, Evaluation::Naive).unwrap(),
        &mut [],
    )
    .unwrap();
    let report = consistency_check(&p, &ledger, Evaluation::Naive).unwrap();
    assert_eq!(report.observed_kernel_evals, 24);
    assert_eq!(report.theoretical_cost, 24.0);
    assert!(report.matches);
}

#[test]
fn naive_runs_always_match_exactly() {
    let model = LinearModel::new(2.0, 1.0)
        .unwrap()
        .spec(InitialLaw::gaussian(vec![0.0], vec![1.0]).unwrap())
        .unwrap();
    for alg in Algorithm::ALL {
        for (t, n, np, m) in [(1.0, 3, 2, 1), (0.7, 4, 3, 2), (2.0, 2, 4, 3)] {
            let p = ParameterPlan::from_parameters(alg, t, n, np, m).unwrap();
            let (_, ledger) = simulate(
                &model,
                &p.simulation_config(1, Evaluation::Naive).unwrap(),
                &mut [],
            )
            .unwrap();
            assert!(
                consistency_check(&p, &ledger, Evaluation::Naive)
                    .unwrap()
                    .matches,
                "{alg}"
            );
        }
    }
}

fn alg_strategy() -> impl Strategy<Value = Algorithm> {
    (0usize..Algorithm::ALL.len()).prop_map(|i| Algorithm::ALL[i])
}

proptest! {
    #[test]
    fn plan_is_monotone_in_epsilon(alg in alg_strategy(), e1 in 0.001f64..0.999, e2 in 0.001f64..0.999, lambda in 0.05f64..5.0) {
        let (small, large) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let a = plan(&PlannerInput::new(alg, small, lambda)).unwrap();
        let b = plan(&PlannerInput::new(alg, large, lambda)).unwrap();
        prop_assert!(a.t >= b.t);
        prop_assert!(a.n >= b.n);
        prop_assert!(a.particles >= b.particles);
        prop_assert!(a.ensembles >= b.ensembles);
    }

    #[test]
    fn cost_is_strictly_increasing_in_each_parameter(
        alg in alg_strategy(),
        t in 0.1f64..20.0,
        n in 1usize..50,
        np in 1usize..50,
        m in 1usize..20,
        dt in 0.01f64..3.0,
    ) {
        let base = theoretical_cost(alg, t, n, np, m).unwrap();
        prop_assert!(theoretical_cost(alg, t + dt, n, np, m).unwrap() > base);
        prop_assert!(theoretical_cost(alg, t, n + 1, np, m).unwrap() > base);
        prop_assert!(theoretical_cost(alg, t, n, np + 1, m).unwrap() > base);
        if matches!(alg, Algorithm::CAea | Algorithm::CsAea) {
            prop_assert!(theoretical_cost(alg, t, n, np, m + 1).unwrap() > base);
        }
    }
}
