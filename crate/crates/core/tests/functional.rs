use condex::{
    ball_proportion, extract_slice, pairwise_distance_grid, semi_metric_sq, Curve, Dataset,
    DistanceMatrix, Error, SecondDifference, SemiMetric, Slice,
};
use proptest::prelude::*;

fn curve(values: Vec<f64>) -> Curve {
    Curve::new(values).unwrap()
}

fn pair(len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-10.0..10.0f64, len),
        prop::collection::vec(-10.0..10.0f64, len),
    )
}

/// Direct evaluation of the squared discretized second-derivative distance.
fn oracle_dist_sq(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mut s = 0.0;
    for l in 1..d.len() - 1 {
        let v = d[l + 1] + d[l - 1] - 2.0 * d[l];
        s += v * v;
    }
    s
}

proptest! {
    #[test]
    fn matches_direct_summation((a, b) in pair(12)) {
        let got = semi_metric_sq(&curve(a.clone()), &curve(b.clone())).unwrap();
        let want = oracle_dist_sq(&a, &b);
        prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn symmetric_and_nonnegative((a, b) in pair(9)) {
        let ab = SecondDifference.dist_sq(&a, &b).unwrap();
        let ba = SecondDifference.dist_sq(&b, &a).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn triangle_inequality((a, b) in pair(10), c in prop::collection::vec(-10.0..10.0f64, 10)) {
        let d = |x: &[f64], y: &[f64]| SecondDifference.dist_sq(x, y).unwrap().sqrt();
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
    }

    #[test]
    fn affine_differences_are_invisible(a in prop::collection::vec(-10.0..10.0f64, 16), c0 in -5.0..5.0f64, c1 in -5.0..5.0f64) {
        let b: Vec<f64> = a.iter().enumerate().map(|(l, v)| v + c0 + c1 * l as f64).collect();
        let d = SecondDifference.dist_sq(&a, &b).unwrap();
        prop_assert!(d <= 1e-24, "d² = {d}");
    }

    #[test]
    fn ball_proportion_is_monotone_in_radius(
        vals in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 6), 2..8),
        h1 in 0.0..3.0f64,
        dh in 0.0..3.0f64,
    ) {
        let curves: Vec<Curve> = vals.into_iter().map(curve).collect();
        let n = curves.len();
        let ds = Dataset::new(curves, vec![vec![1.0]; n]).unwrap();
        let t = ds.curves()[0].clone();
        let p1 = ball_proportion(&ds, &t, h1).unwrap();
        let p2 = ball_proportion(&ds, &t, h1 + dh).unwrap();
        prop_assert!(p1 <= p2);
        prop_assert!(p1 >= 1.0 / n as f64);
    }

    #[test]
    fn slices_grow_with_radius(
        vals in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 5), 2..7),
        ys in prop::collection::vec(prop::collection::vec(0.1..100.0f64, 1..5), 7),
        h1 in 0.0..2.0f64,
        dh in 0.0..2.0f64,
    ) {
        let n = vals.len();
        let curves: Vec<Curve> = vals.into_iter().map(curve).collect();
        let ds = Dataset::new(curves, ys[..n].to_vec()).unwrap();
        let t = ds.curves()[0].clone();
        let small = extract_slice(&ds, &t, h1).unwrap();
        let big = extract_slice(&ds, &t, h1 + dh).unwrap();
        prop_assert!(small.m() <= big.m());
        let mut rest = big.members().to_vec();
        for y in small.members() {
            let pos = rest.iter().position(|z| z == y);
            prop_assert!(pos.is_some());
            rest.swap_remove(pos.unwrap());
        }
    }

    #[test]
    fn order_statistics_match_a_sort(ys in prop::collection::vec(0.001..1e6f64, 1..60)) {
        let s = Slice::from_responses("t", ys.clone()).unwrap();
        let mut sorted = ys.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert_eq!(s.order_stats(), &sorted[..]);
        let m = ys.len();
        for i in 1..=m {
            prop_assert_eq!(s.top(i), sorted[m - i]);
            prop_assert_eq!(s.order_stat(i), sorted[i - 1]);
        }
    }
}

#[test]
fn distance_matrix_agrees_with_pairwise_calls() {
    let curves: Vec<Curve> = (0..5)
        .map(|i| curve((0..8).map(|l| ((i * 3 + l) as f64).sin()).collect()))
        .collect();
    let ds = Dataset::new(curves.clone(), vec![vec![1.0]; 5]).unwrap();
    let dm = DistanceMatrix::new(&ds).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            assert_eq!(
                dm.row(i)[j],
                semi_metric_sq(&curves[i], &curves[j]).unwrap()
            );
        }
    }
    for h in [0.0, 0.5, 1.0, 2.0, 10.0] {
        for i in 0..5 {
            assert_eq!(
                dm.slice(&ds, i, h).unwrap(),
                extract_slice(&ds, &curves[i], h).unwrap()
            );
        }
    }
}

#[test]
fn boundary_point_is_inside_closed_ball() {
    let a = curve(vec![0.0, 0.0, 0.0, 0.0]);
    let b = curve(vec![0.0, 0.0, 1.0, 0.0]);
    let d = semi_metric_sq(&a, &b).unwrap().sqrt();
    let ds = Dataset::new(vec![a.clone(), b], vec![vec![2.0], vec![3.0]]).unwrap();
    assert_eq!(extract_slice(&ds, &a, d).unwrap().m(), 2);
    assert_eq!(extract_slice(&ds, &a, d * (1.0 - 1e-12)).unwrap().m(), 1);
}

#[test]
fn grid_from_identical_curves_is_degenerate() {
    let c = curve(vec![1.0, 2.0, 3.0]);
    let ds = Dataset::new(vec![c.clone(), c], vec![vec![1.0], vec![1.0]]).unwrap();
    assert_eq!(
        pairwise_distance_grid(&ds, &[0.5]),
        Err(Error::DegenerateGrid)
    );
}

#[test]
fn target_outside_design_can_have_empty_window() {
    let ds = Dataset::new(vec![curve(vec![0.0, 0.0, 0.0])], vec![vec![1.0, 2.0]]).unwrap();
    let far = curve(vec![0.0, 5.0, 0.0]);
    assert!(matches!(
        extract_slice(&ds, &far, 1.0),
        Err(Error::EmptyWindow { .. })
    ));
}
