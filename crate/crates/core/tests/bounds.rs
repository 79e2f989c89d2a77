use marginlab::boosting::{adaboost, WeakLearner};
use marginlab::bounds::{
    adaboost_product_bound, default_delta_grid, delta_n, exp_loss_factor, multiclass_factor, plug_in_delta,
    theorem11_multiclass_bound, theorem2_bound, theorem4_two_sided, ComplexityInput, CostFunction,
};
use marginlab::data::{empirical_margin_distribution, Dataset, MarginDistribution};
use proptest::prelude::*;

fn margins() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..=1.0f64, 1..60)
}

fn dist(v: &[f64]) -> MarginDistribution {
    MarginDistribution::from_values(v).unwrap()
}

fn t2(m: &MarginDistribution, rn: f64, t: f64, cost: &CostFunction, n: usize) -> f64 {
    theorem2_bound(m, &ComplexityInput::rademacher(rn), cost, n, t, &default_delta_grid(m, n))
        .unwrap()
        .bound_value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn margin_bound_is_monotone(v in margins(), rn in 0.0..0.3f64, drn in 0.0..0.2f64, t in 0.1..3.0f64, dt in 0.0..1.0f64, shift in 0.0..0.5f64) {
        let n = v.len();
        let m = dist(&v);
        let cost = CostFunction::UpperStep;
        let base = t2(&m, rn, t, &cost, n);
        prop_assert!(t2(&m, rn + drn, t, &cost, n) >= base);
        prop_assert!(t2(&m, rn, t + dt, &cost, n) >= base);
        // larger margins on the same grid can only help
        let up = dist(&v.iter().map(|x| x + shift).collect::<Vec<_>>());
        let grid = default_delta_grid(&m, n);
        let cx = ComplexityInput::rademacher(rn);
        let a = theorem2_bound(&m, &cx, &cost, n, t, &grid).unwrap().bound_value;
        let b = theorem2_bound(&up, &cx, &cost, n, t, &grid).unwrap().bound_value;
        prop_assert!(b <= a + 1e-12);
    }

    #[test]
    fn upper_step_bound_dominates_training_error(v in margins(), rn in 0.0..0.3f64) {
        let m = dist(&v);
        let r = theorem2_bound(&m, &ComplexityInput::rademacher(rn), &CostFunction::UpperStep, v.len(), 2.0, &default_delta_grid(&m, v.len())).unwrap();
        prop_assert!(r.bound_value >= m.error_rate());
        prop_assert!((r.bound_value - r.terms.total()).abs() < 1e-12);
    }

    #[test]
    fn cost_functions_are_sandwiched(x in -3.0..3.0f64) {
        let hard = |y: f64| if y <= 0.0 { 1.0 } else { 0.0 };
        let lower_hard = |y: f64| if y <= -1.0 { 1.0 } else { 0.0 };
        let up = CostFunction::UpperStep.eval(x);
        let lo = CostFunction::LowerStep.eval(x);
        prop_assert!(up >= hard(x));
        prop_assert!(lo <= hard(x));
        prop_assert!(lo >= lower_hard(x));
        let pl = CostFunction::piecewise_linear(vec![(0.0, 1.0), (1.0, 0.0)]).unwrap();
        prop_assert!((pl.eval(x) - up).abs() < 1e-15);
    }

    #[test]
    fn plug_in_delta_matches_a_grid_scan(v in margins(), rn in 0.001..0.2f64) {
        let m = dist(&v);
        let d = plug_in_delta(&m, rn).unwrap();
        let scan = (1..=20_000)
            .map(|i| i as f64 / 20_000.0)
            .filter(|&x| x * m.mass_abs_le(x) <= rn)
            .fold(0.0, f64::max);
        prop_assert!((d - scan).abs() <= 5e-5 + 1e-12, "sweep {} scan {}", d, scan);
    }

    #[test]
    fn two_sided_bound_counts_both_tails(v in margins(), rn in 0.0..0.2f64) {
        let m = dist(&v);
        let n = v.len();
        let grid = default_delta_grid(&m, n);
        let r = theorem4_two_sided(&m, &ComplexityInput::rademacher(rn), n, 2.0, &grid).unwrap();
        let d = r.delta;
        let count = v.iter().filter(|x| x.abs() <= d).count() as f64 / n as f64;
        prop_assert!((r.terms.empirical_cost - count).abs() < 1e-12);
        prop_assert!((r.terms.complexity_term + r.terms.loglog_term - delta_n(rn, d, n).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn exp_loss_factor_identity_and_adaboost_bound() {
    let xs: Vec<f64> = (0..40).map(|i| f64::from(i) / 40.0).collect();
    let ys: Vec<i64> = xs.iter().map(|&x| if (0.2..0.6).contains(&x) { 1 } else { -1 }).collect();
    let data = Dataset::from_1d(&xs, &ys).unwrap();
    let trace = adaboost(&data, 8, WeakLearner::Stump, None).unwrap();
    assert!(!trace.any_clamped());
    let cx = ComplexityInput::rademacher(0.05);
    let r = adaboost_product_bound(&trace, &cx, 40, 2.0).unwrap();
    let product: f64 = trace.rounds.iter().map(|r| exp_loss_factor(r.error)).product();
    assert!((r.terms.empirical_cost - product).abs() < 1e-15);
    let train = empirical_margin_distribution(&trace.classifier().unwrap(), &data).unwrap().error_rate();
    assert!(train <= product);
    let z: f64 = trace.rounds.iter().map(|r| r.z).product();
    assert!((z - product).abs() < 1e-12);
}

#[test]
fn multiclass_bound_uses_its_factor() {
    assert_eq!(multiclass_factor(2).unwrap(), 48.0);
    assert_eq!(multiclass_factor(3).unwrap(), 120.0);
    assert!(multiclass_factor(1).is_err());
    let m = dist(&[0.5, 0.9, -0.1]);
    let r = theorem11_multiclass_bound(&m, &ComplexityInput::rademacher(0.01), 3, 3, 1.0, &[0.5]).unwrap();
    assert!((r.terms.complexity_term - 120.0 * 0.01 / 0.5).abs() < 1e-12);
    assert!((r.terms.empirical_cost - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn gaussian_input_changes_constants() {
    let m = dist(&[0.5, 0.7]);
    let g = theorem2_bound(&m, &ComplexityInput::gaussian(0.1), &CostFunction::UpperStep, 4, 1.0, &[1.0]).unwrap();
    let expect = 2.0 * (2.0 * std::f64::consts::PI).sqrt() * 0.1;
    assert!((g.terms.complexity_term - expect).abs() < 1e-12);
    assert!((g.terms.confidence_term - 3.0 / 2.0).abs() < 1e-12);
}

#[test]
fn bounds_reject_bad_arguments() {
    let m = dist(&[0.5]);
    let cx = ComplexityInput::rademacher(0.1);
    let cost = CostFunction::UpperStep;
    assert!(theorem2_bound(&m, &cx, &cost, 0, 1.0, &[0.5]).is_err());
    assert!(theorem2_bound(&m, &cx, &cost, 1, -1.0, &[0.5]).is_err());
    assert!(theorem2_bound(&m, &cx, &cost, 1, 1.0, &[]).is_err());
    assert!(theorem2_bound(&m, &cx, &cost, 1, 1.0, &[1.5]).is_err());
    assert!(theorem2_bound(&m, &ComplexityInput::rademacher(-0.1), &cost, 1, 1.0, &[0.5]).is_err());
    assert!(ComplexityInput::vc(0, 10, 1.0).is_err());
}
