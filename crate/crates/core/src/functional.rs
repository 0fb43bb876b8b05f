//! Discretized curves, the second-difference semi-metric and moving-window
//! slices.
//!
//! A design point `x` belongs to the window around a target `t` when
//! `d(x, t) <= h` (closed ball). All responses attached to in-window design
//! points are pooled into a [`Slice`] together with their order statistics.

use crate::error::{Error, Result};

/// A curve observed on a fixed grid of abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    id: Option<String>,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Structural(format!(
                "curve value at position {pos} is not finite"
            )));
        }
        Ok(Self { id: None, values })
    }

    pub fn with_id(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let mut curve = Self::new(values)?;
        curve.id = Some(id.into());
        Ok(curve)
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    pub fn label(&self) -> &str {
        self.id.as_deref().unwrap_or("<anonymous>")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Squared Euclidean norm of the discretized values (the "energy").
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Design points with their positive responses.
#[derive(Debug, Clone)]
pub struct Dataset {
    curves: Vec<Curve>,
    responses: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(curves: Vec<Curve>, responses: Vec<Vec<f64>>) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::Structural("dataset has no curves".into()));
        }
        if curves.len() != responses.len() {
            return Err(Error::Structural(format!(
                "{} curves but {} response groups",
                curves.len(),
                responses.len()
            )));
        }
        let len = curves[0].len();
        if let Some(c) = curves.iter().find(|c| c.len() != len) {
            return Err(Error::Structural(format!(
                "curve {} has length {} but the first curve has length {len}",
                c.label(),
                c.len()
            )));
        }
        for (curve, ys) in curves.iter().zip(&responses) {
            if ys.is_empty() {
                return Err(Error::Structural(format!(
                    "curve {} has no responses",
                    curve.label()
                )));
            }
            if let Some(y) = ys.iter().find(|y| !(**y > 0.0 && y.is_finite())) {
                return Err(Error::Domain(format!(
                    "response {y} of curve {} is not a finite positive number",
                    curve.label()
                )));
            }
        }
        Ok(Self { curves, responses })
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn responses(&self) -> &[Vec<f64>] {
        &self.responses
    }

    pub fn n_curves(&self) -> usize {
        self.curves.len()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.curves.iter().position(|c| c.id() == Some(id))
    }

    /// Same design points, new responses.
    pub fn with_responses(&self, responses: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.curves.clone(), responses)
    }
}

/// Responses falling in the window `B(t, h)`, with their order statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    target: String,
    radius: f64,
    design_points: usize,
    members: Vec<f64>,
    order_stats: Vec<f64>,
}

impl Slice {
    /// Build a slice directly from a response sample (no covariate).
    pub fn from_responses(target: impl Into<String>, members: Vec<f64>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyWindow {
                target: target.into(),
                radius: 0.0,
            });
        }
        if let Some(v) = members.iter().find(|v| v.is_nan()) {
            return Err(Error::Domain(format!("slice member {v} is NaN")));
        }
        let mut order_stats = members.clone();
        // stable: equal values keep input order
        order_stats.sort_by(|a, b| a.total_cmp(b));
        Ok(Self {
            target: target.into(),
            radius: 0.0,
            design_points: 1,
            members,
            order_stats,
        })
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Number of design points whose covariate fell in the window.
    pub fn design_points(&self) -> usize {
        self.design_points
    }

    /// Slice size `m_t`.
    pub fn m(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[f64] {
        &self.members
    }

    /// Ascending order statistics `Z_{1,m} <= ... <= Z_{m,m}`.
    pub fn order_stats(&self) -> &[f64] {
        &self.order_stats
    }

    /// `Z_{j,m}` with 1-based `j`.
    pub fn order_stat(&self, j: usize) -> f64 {
        self.order_stats[j - 1]
    }

    /// `Z_{m-i+1,m}`: the `i`-th largest response (`i = 1` is the maximum).
    pub fn top(&self, i: usize) -> f64 {
        self.order_stats[self.m() - i]
    }

    /// Multiply every response by `factor` (order is preserved for `factor > 0`).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            members: self.members.iter().map(|v| v * factor).collect(),
            order_stats: self.order_stats.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// Raise every response to `power` (order is preserved for `power > 0`).
    pub fn powered(&self, power: f64) -> Self {
        Self {
            members: self.members.iter().map(|v| v.powf(power)).collect(),
            order_stats: self.order_stats.iter().map(|v| v.powf(power)).collect(),
            ..self.clone()
        }
    }
}

/// Plug-in point for alternative curve semi-metrics.
pub trait SemiMetric: Sync {
    /// Squared semi-metric between two equal-length curves.
    fn dist_sq(&self, a: &[f64], b: &[f64]) -> Result<f64>;
}

/// Discretized second-derivative semi-metric:
/// `sum_{l=2}^{L-1} ((a-b)_{l+1} + (a-b)_{l-1} - 2 (a-b)_l)^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SecondDifference;

impl SemiMetric for SecondDifference {
    fn dist_sq(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::Structural(format!(
                "curve lengths differ: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        if a.len() < 3 {
            return Err(Error::Structural(format!(
                "semi-metric needs at least 3 points, got {}",
                a.len()
            )));
        }
        let sum = a
            .windows(3)
            .zip(b.windows(3))
            .map(|(wa, wb)| {
                let second = (wa[2] - wb[2]) + (wa[0] - wb[0]) - 2.0 * (wa[1] - wb[1]);
                second * second
            })
            .sum();
        Ok(sum)
    }
}

pub fn semi_metric_sq(a: &Curve, b: &Curve) -> Result<f64> {
    SecondDifference.dist_sq(a.values(), b.values())
}

/// Closed-ball test on squared distances; the square-root comparison keeps
/// radii that were themselves computed as `sqrt(d2)` on the boundary.
#[inline]
pub(crate) fn within(dist_sq: f64, h: f64) -> bool {
    dist_sq <= h * h || dist_sq.sqrt() <= h
}

fn check_radius(h: f64) -> Result<()> {
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::Parameter(format!(
            "window radius must be finite and >= 0, got {h}"
        )));
    }
    Ok(())
}

fn distances_to<M: SemiMetric + ?Sized>(metric: &M, ds: &Dataset, t: &Curve) -> Result<Vec<f64>> {
    ds.curves()
        .iter()
        .map(|c| metric.dist_sq(c.values(), t.values()))
        .collect()
}

/// Proportion `phi(h)` of design points inside `B(t, h)`.
pub fn ball_proportion(ds: &Dataset, t: &Curve, h: f64) -> Result<f64> {
    check_radius(h)?;
    let d2 = distances_to(&SecondDifference, ds, t)?;
    let inside = d2.iter().filter(|&&d| within(d, h)).count();
    Ok(inside as f64 / ds.n_curves() as f64)
}

pub fn extract_slice(ds: &Dataset, t: &Curve, h: f64) -> Result<Slice> {
    extract_slice_with(&SecondDifference, ds, t, h)
}

pub fn extract_slice_with<M: SemiMetric + ?Sized>(
    metric: &M,
    ds: &Dataset,
    t: &Curve,
    h: f64,
) -> Result<Slice> {
    check_radius(h)?;
    let d2 = distances_to(metric, ds, t)?;
    slice_from_distances(ds, t.label(), &d2, h)
}

pub(crate) fn slice_from_distances(
    ds: &Dataset,
    target: &str,
    d2: &[f64],
    h: f64,
) -> Result<Slice> {
    let mut members = Vec::new();
    let mut design_points = 0;
    for (ys, &d) in ds.responses().iter().zip(d2) {
        if within(d, h) {
            design_points += 1;
            members.extend_from_slice(ys);
        }
    }
    if members.is_empty() {
        return Err(Error::EmptyWindow {
            target: target.to_string(),
            radius: h,
        });
    }
    let mut order_stats = members.clone();
    order_stats.sort_by(|a, b| a.total_cmp(b));
    Ok(Slice {
        target: target.to_string(),
        radius: h,
        design_points,
        members,
        order_stats,
    })
}

/// Squared semi-metric between every pair of design points (row-major, n x n).
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    d2: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(ds: &Dataset) -> Result<Self> {
        Self::with_metric(&SecondDifference, ds)
    }

    pub fn with_metric<M: SemiMetric + ?Sized>(metric: &M, ds: &Dataset) -> Result<Self> {
        let n = ds.n_curves();
        let mut d2 = vec![0.0; n * n];
        let curves = ds.curves();
        for i in 0..n {
            for j in (i + 1)..n {
                let d = metric.dist_sq(curves[i].values(), curves[j].values())?;
                d2[i * n + j] = d;
                d2[j * n + i] = d;
            }
        }
        Ok(Self { n, d2 })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d2[i * self.n..(i + 1) * self.n]
    }

    /// Slice around design point `i`.
    pub fn slice(&self, ds: &Dataset, i: usize, h: f64) -> Result<Slice> {
        check_radius(h)?;
        slice_from_distances(ds, ds.curves()[i].label(), self.row(i), h)
    }

    /// Distances (not squared) of the `n(n-1)/2` unordered pairs, ascending.
    pub fn sorted_pair_distances(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                out.push(self.d2[i * self.n + j].sqrt());
            }
        }
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }
}

/// Empirical quantiles of the pairwise distances at `levels`, using the
/// order statistic of rank `ceil(p * N)`. Zero radii are dropped; the result
/// is ascending and deduplicated.
pub fn pairwise_distance_grid(ds: &Dataset, levels: &[f64]) -> Result<Vec<f64>> {
    if ds.n_curves() < 2 {
        return Err(Error::Structural(
            "distance grid needs at least two curves".into(),
        ));
    }
    let distances = DistanceMatrix::new(ds)?.sorted_pair_distances();
    if distances.iter().all(|&d| d == 0.0) {
        return Err(Error::DegenerateGrid);
    }
    let mut grid = Vec::with_capacity(levels.len());
    for &p in levels {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Parameter(format!(
                "distance quantile level must lie in (0, 1], got {p}"
            )));
        }
        let h = distances[rank_index(p, distances.len())];
        if h > 0.0 {
            grid.push(h);
        }
    }
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();
    if grid.is_empty() {
        return Err(Error::DegenerateGrid);
    }
    Ok(grid)
}

/// Zero-based index of the order statistic of rank `ceil(p * n)`, clamped to `[1, n]`.
pub(crate) fn rank_index(p: f64, n: usize) -> usize {
    // tolerance absorbs products such as 0.1 * 120 = 12.000000000000002
    let rank = (p * n as f64 - 1e-9).ceil() as usize;
    rank.clamp(1, n) - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(values: &[f64]) -> Curve {
        Curve::new(values.to_vec()).unwrap()
    }

    fn brute_force_sq(a: &[f64], b: &[f64]) -> f64 {
        let mut total = 0.0;
        for l in 1..a.len() - 1 {
            let diff = |i: usize| a[i] - b[i];
            let term = diff(l + 1) + diff(l - 1) - 2.0 * diff(l);
            total += term * term;
        }
        total
    }

    #[test]
    fn identical_curves_have_zero_distance() {
        let a = curve(&[1.0, -2.0, 3.5, 0.25, 7.0]);
        assert_eq!(semi_metric_sq(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn affine_difference_is_invisible() {
        let a = curve(&[7.0, 9.0, 11.0, 13.0]);
        let b = curve(&[0.0; 4]);
        assert_eq!(semi_metric_sq(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn single_spike_hand_value() {
        let a = [0.0, 0.0, 1.0, 0.0, 0.0];
        let b = [0.0; 5];
        assert_eq!(brute_force_sq(&a, &b), 6.0);
        assert_eq!(semi_metric_sq(&curve(&a), &curve(&b)).unwrap(), 6.0);
    }

    #[test]
    fn structural_errors() {
        let short = curve(&[1.0, 2.0]);
        assert!(matches!(
            semi_metric_sq(&short, &short),
            Err(Error::Structural(_))
        ));
        let a = curve(&[1.0, 2.0, 3.0]);
        let b = curve(&[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(semi_metric_sq(&a, &b), Err(Error::Structural(_))));
        assert!(Curve::new(vec![1.0, f64::NAN, 2.0]).is_err());
    }

    fn four_points() -> Dataset {
        let curves = vec![
            Curve::with_id("a", vec![0.0, 0.0, 0.0, 0.0]).unwrap(),
            Curve::with_id("b", vec![0.0, 1.0, 0.0, 0.0]).unwrap(),
            Curve::with_id("c", vec![0.0, 0.0, 3.0, 0.0]).unwrap(),
            Curve::with_id("d", vec![2.0, 0.0, 0.0, 5.0]).unwrap(),
        ];
        Dataset::new(curves, vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap()
    }

    #[test]
    fn ball_proportion_full_and_degenerate() {
        let ds = four_points();
        let t = ds.curves()[0].clone();
        assert_eq!(ball_proportion(&ds, &t, 1e6).unwrap(), 1.0);
        assert_eq!(ball_proportion(&ds, &t, 0.0).unwrap(), 0.25);
    }

    #[test]
    fn slice_of_single_point_is_sorted() {
        let c = Curve::with_id("only", vec![1.0, 2.0, 4.0]).unwrap();
        let ds = Dataset::new(vec![c.clone()], vec![vec![3.0, 1.0, 2.0]]).unwrap();
        let s = extract_slice(&ds, &c, 0.0).unwrap();
        assert_eq!(s.order_stats(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.members(), &[3.0, 1.0, 2.0]);
        assert_eq!(s.m(), 3);
    }

    #[test]
    fn slice_merges_two_points() {
        let a = Curve::with_id("a", vec![0.0, 0.0, 0.0]).unwrap();
        let b = Curve::with_id("b", vec![0.0, 1.0, 0.0]).unwrap();
        let far = Curve::with_id("far", vec![0.0, 50.0, 0.0]).unwrap();
        let ds = Dataset::new(
            vec![a.clone(), b, far],
            vec![vec![5.0], vec![4.0, 6.0], vec![100.0]],
        )
        .unwrap();
        // d(a, b) = |1 * -2| = 2
        let s = extract_slice(&ds, &a, 2.0).unwrap();
        assert_eq!(s.m(), 3);
        assert_eq!(s.design_points(), 2);
        assert_eq!(s.order_stats(), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn empty_window_is_an_error() {
        let ds = four_points();
        let t = curve(&[0.0, 0.5, 0.0, 0.0]);
        assert!(matches!(
            extract_slice(&ds, &t, 0.1),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn boundary_is_inside() {
        let ds = four_points();
        let t = ds.curves()[0].clone();
        let d = semi_metric_sq(&ds.curves()[2], &t).unwrap().sqrt();
        let s = extract_slice(&ds, &t, d).unwrap();
        assert!(s.members().contains(&3.0));
    }

    #[test]
    fn distance_grid_examples() {
        let a = Curve::with_id("a", vec![0.0, 0.0, 0.0]).unwrap();
        let b = Curve::with_id("b", vec![0.0, 1.0, 0.0]).unwrap();
        let ds = Dataset::new(vec![a.clone(), b], vec![vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(pairwise_distance_grid(&ds, &[1.0]).unwrap(), vec![2.0]);

        // distances 1, 2, 3 via a single interior point: second difference = -2 * v
        let c = |v: f64, id: &str| Curve::with_id(id, vec![0.0, v, 0.0]).unwrap();
        let ds = Dataset::new(
            vec![c(0.0, "x"), c(0.5, "y"), c(1.5, "z")],
            vec![vec![1.0]; 3],
        )
        .unwrap();
        assert_eq!(
            pairwise_distance_grid(&ds, &[0.5, 1.0]).unwrap(),
            vec![2.0, 3.0]
        );

        let same = Dataset::new(vec![a.clone(), a], vec![vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(
            pairwise_distance_grid(&same, &[0.5]),
            Err(Error::DegenerateGrid)
        );
    }

    #[test]
    fn rank_index_convention() {
        assert_eq!(rank_index(0.5, 3), 1);
        assert_eq!(rank_index(1.0, 3), 2);
        assert_eq!(rank_index(0.1, 120), 11);
        assert_eq!(rank_index(1e-6, 10), 0);
    }

    #[test]
    fn dataset_rejects_bad_responses() {
        let a = Curve::new(vec![0.0; 3]).unwrap();
        assert!(matches!(
            Dataset::new(vec![a.clone()], vec![vec![1.0, 0.0]]),
            Err(Error::Domain(_))
        ));
        assert!(Dataset::new(vec![a], vec![vec![]]).is_err());
    }
}
