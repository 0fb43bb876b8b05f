use condex::{
    av_factor, classify_situation, extrapolate, q1, q2, tail_index, ConditionalModel, Curve,
    CustomWeight, Error, Situation, Slice, TailIndexMap, WeightFunction,
};
use proptest::prelude::*;

fn weights() -> [WeightFunction; 2] {
    [WeightFunction::Hill, WeightFunction::Zipf]
}

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1e4f64, 12..80)
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

/// Independent evaluation of the weighted log-spacing ratio.
fn oracle_gamma(ys: &[f64], k: usize, w: impl Fn(f64) -> f64) -> f64 {
    let mut z = ys.to_vec();
    z.sort_by(|a, b| b.total_cmp(a));
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 1..=k {
        let wi = w(i as f64 / k as f64);
        num += i as f64 * (z[i - 1] / z[i]).ln() * wi;
        den += wi;
    }
    num / den
}

proptest! {
    #[test]
    fn tail_index_matches_direct_summation(ys in sample(), kf in 0.05..0.9f64) {
        let s = Slice::from_responses("t", ys.clone()).unwrap();
        let k = ((kf * (ys.len() - 1) as f64) as usize).max(2);
        let hill = tail_index(&s, k, &WeightFunction::Hill).unwrap().gamma_hat;
        let zipf = tail_index(&s, k, &WeightFunction::Zipf).unwrap().gamma_hat;
        prop_assert!(rel(hill, oracle_gamma(&ys, k, |_| 1.0)) < 1e-12);
        prop_assert!(rel(zipf, oracle_gamma(&ys, k, |s| -s.ln())) < 1e-12);
    }

    #[test]
    fn tail_index_is_scale_invariant(ys in sample(), e in -20i32..20, lambda in 1e-3..1e3f64) {
        let s = Slice::from_responses("t", ys.clone()).unwrap();
        let k = ys.len() / 2;
        for w in weights() {
            let g = tail_index(&s, k, &w).unwrap().gamma_hat;
            let pow2 = tail_index(&s.scaled(2f64.powi(e)), k, &w).unwrap().gamma_hat;
            prop_assert_eq!(g.to_bits(), pow2.to_bits());
            let general = tail_index(&s.scaled(lambda), k, &w).unwrap().gamma_hat;
            prop_assert!(rel(general, g) < 1e-12 || (general - g).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_index_scales_with_powers(ys in sample(), p in 0.1..5.0f64) {
        let s = Slice::from_responses("t", ys.clone()).unwrap();
        let k = ys.len() / 3;
        for w in weights() {
            let g = tail_index(&s, k, &w).unwrap().gamma_hat;
            let gp = tail_index(&s.powered(p), k, &w).unwrap().gamma_hat;
            prop_assert!((gp - p * g).abs() <= 1e-12 * (p * g).max(1.0));
        }
    }

    #[test]
    fn quantile_estimators_are_scale_equivariant(ys in sample(), e in -20i32..20, lambda in 1e-3..1e3f64) {
        let s = Slice::from_responses("t", ys.clone()).unwrap();
        let m = ys.len();
        let alpha = 3.0 / m as f64;
        let a1 = q1(&s, alpha).unwrap().value;
        let f = 2f64.powi(e);
        prop_assert_eq!(q1(&s.scaled(f), alpha).unwrap().value, a1 * f);
        prop_assert!(rel(q1(&s.scaled(lambda), alpha).unwrap().value, a1 * lambda) < 1e-12);
        let k = m / 2;
        let alpha2 = 0.1 / m as f64;
        for w in weights() {
            let a2 = q2(&s, alpha2, k, &w).unwrap().value;
            prop_assert_eq!(q2(&s.scaled(f), alpha2, k, &w).unwrap().value, a2 * f);
            prop_assert!(rel(q2(&s.scaled(lambda), alpha2, k, &w).unwrap().value, a2 * lambda) < 1e-12);
        }
    }

    #[test]
    fn q1_is_non_increasing_in_order(ys in sample()) {
        let s = Slice::from_responses("t", ys.clone()).unwrap();
        let m = ys.len();
        let mut prev = f64::INFINITY;
        for j in 1..m {
            let v = q1(&s, j as f64 / m as f64).unwrap().value;
            prop_assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn q2_decreases_in_order(ys in sample()) {
        let s = Slice::from_responses("t", ys.clone()).unwrap();
        let m = ys.len();
        let k = m / 2;
        let est = |a: f64| q2(&s, a, k, &WeightFunction::Hill).unwrap();
        let base = est(1e-6);
        prop_assume!(base.extrapolation.unwrap().gamma_hat > 0.0);
        prop_assert!(est(1e-6).value > est(1e-5).value);
        prop_assert!(est(1e-5).value > est(1e-4).value);
        let ext = base.extrapolation.unwrap();
        let recomputed = ext.anchor * (ext.beta / 1e-6).powf(ext.gamma_hat);
        prop_assert!(rel(base.value, recomputed) < 1e-15);
    }
}

#[test]
fn k_bounds_are_enforced() {
    let s = Slice::from_responses("t", vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    for k in [0, 4, 5] {
        assert!(matches!(
            tail_index(&s, k, &WeightFunction::Hill),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            q2(&s, 0.01, k, &WeightFunction::Hill),
            Err(Error::Parameter(_))
        ));
    }
    assert!(tail_index(&s, 3, &WeightFunction::Hill).is_ok());
}

#[test]
fn custom_weight_normalization_is_checked() {
    let bad = CustomWeight::new("double", |_| 2.0);
    assert!(matches!(bad, Err(Error::Config(_))));
    let linear = CustomWeight::new("linear", |s| 2.0 * (1.0 - s)).unwrap();
    // ∫ 4 (1 - s)² = 4/3
    let av = av_factor(&WeightFunction::Custom(linear)).unwrap();
    assert!((av - 4.0 / 3.0).abs() < 1e-8);
}

#[test]
fn hill_estimator_is_consistent_on_pareto_samples() {
    let m = 10_000;
    let k = (m as f64).powf(0.6).floor() as usize;
    let model = ConditionalModel::pareto(TailIndexMap::Constant(0.5));
    let x = Curve::new(vec![0.0; 3]).unwrap();
    let errs: Vec<f64> = (0..100)
        .map(|r| {
            let ys = model.sample(&x, m, 1000 + r).unwrap();
            let s = Slice::from_responses("t", ys).unwrap();
            (tail_index(&s, k, &WeightFunction::Hill).unwrap().gamma_hat - 0.5).abs()
        })
        .collect();
    let mae = errs.iter().sum::<f64>() / errs.len() as f64;
    assert!(mae <= 0.03, "{mae}");
}

#[test]
fn doubling_sample_has_log_two_spacings() {
    let s = Slice::from_responses("t", vec![16.0, 1.0, 8.0, 2.0, 4.0]).unwrap();
    let g = tail_index(&s, 4, &WeightFunction::Hill).unwrap().gamma_hat;
    assert!((g - 2.5 * 2f64.ln()).abs() < 1e-15);
}

#[test]
fn q1_hand_examples() {
    let s = Slice::from_responses("t", (0..10).map(|i| 2.0 * i as f64 + 1.0).collect()).unwrap();
    assert_eq!(q1(&s, 0.25).unwrap().value, 17.0);
    assert_eq!(q1(&s, 0.1).unwrap().value, 19.0);
    assert_eq!(q1(&s, 0.999).unwrap().value, 3.0);
    assert!(matches!(
        q1(&s, 0.05),
        Err(Error::OrderBeyondSample { m: 10, .. })
    ));
}

#[test]
fn extrapolation_hand_example() {
    let mut ys: Vec<f64> = (1..=96).map(|i| i as f64 / 100.0).collect();
    ys.extend([10.0, 11.0, 12.0, 13.0]);
    let s = Slice::from_responses("t", ys).unwrap();
    let est = extrapolate(&s, 0.001, 4, 0.5).unwrap();
    assert_eq!(est.extrapolation.unwrap().anchor, 10.0);
    assert!((est.value - 10.0 * 40f64.sqrt()).abs() < 1e-12);
    let at_anchor = q2(&s, 0.04, 4, &WeightFunction::Zipf).unwrap();
    assert_eq!(at_anchor.value, q1(&s, 0.04).unwrap().value);
    assert!(matches!(
        q2(&s, 0.05, 4, &WeightFunction::Hill),
        Err(Error::NotExtrapolation { .. })
    ));
}

#[test]
fn situation_labels() {
    assert_eq!(classify_situation(1000, 0.1), Situation::S1);
    assert_eq!(classify_situation(1000, 0.003), Situation::S2);
    assert_eq!(classify_situation(1000, 0.001), Situation::S2);
    assert_eq!(classify_situation(1000, 1e-4), Situation::S3);
}

#[test]
fn custom_weight_quadrature_matches_closed_form() {
    // ∫ (9/4)(1 - s²)² = (9/4)(8/15)
    let w = CustomWeight::new("parabola", |s| 1.5 * (1.0 - s * s)).unwrap();
    let av = av_factor(&WeightFunction::Custom(w)).unwrap();
    assert!((av - 1.2).abs() < 1e-8);
    assert_eq!(av_factor(&WeightFunction::Hill).unwrap(), 1.0);
    assert_eq!(av_factor(&WeightFunction::Zipf).unwrap(), 2.0);
}
