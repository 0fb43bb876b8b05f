//! Grid search for the window radius `h` and the number of top order
//! statistics `k`, shared by every design point.
//!
//! Two criteria are minimized over the grid:
//!
//! * heuristic: distance between Hill- and Zipf-weighted extrapolated
//!   quantiles across design points;
//! * oracle: distance between the Hill-weighted estimate and the true
//!   conditional quantile (only available in simulations).
//!
//! Pairs are evaluated in parallel and reduced in grid order, smallest `h`
//! then smallest `k` winning ties.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functional::{pairwise_distance_grid, Dataset, DistanceMatrix, Slice};
use crate::models::ConditionalModel;
use crate::quantile::q2;
use crate::tailindex::WeightFunction;

pub const DEFAULT_H_LEVELS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const DEFAULT_K_STEP: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionGrid {
    h_values: Vec<f64>,
    k_values: Vec<usize>,
}

impl SelectionGrid {
    pub fn new(mut h_values: Vec<f64>, mut k_values: Vec<usize>) -> Result<Self> {
        if h_values.is_empty() || k_values.is_empty() {
            return Err(Error::Selection("selection grid is empty".into()));
        }
        if let Some(h) = h_values.iter().find(|h| !(**h >= 0.0) || !h.is_finite()) {
            return Err(Error::Parameter(format!(
                "grid radius {h} is not a finite non-negative number"
            )));
        }
        if k_values.contains(&0) {
            return Err(Error::Parameter("grid k values must be >= 1".into()));
        }
        h_values.sort_by(|a, b| a.total_cmp(b));
        h_values.dedup();
        k_values.sort_unstable();
        k_values.dedup();
        Ok(Self { h_values, k_values })
    }

    /// Radii at the pairwise-distance quantiles 0.1, ..., 0.9 and
    /// `k ∈ {5, 10, ..., ⌊min_t m_t / 2⌋}` with `m_t` taken at the smallest radius.
    pub fn default_for(ds: &Dataset) -> Result<Self> {
        let h_values = pairwise_distance_grid(ds, &DEFAULT_H_LEVELS)?;
        let dm = DistanceMatrix::new(ds)?;
        let smallest = h_values[0];
        let mut min_m = usize::MAX;
        for i in 0..ds.n_curves() {
            min_m = min_m.min(dm.slice(ds, i, smallest)?.m());
        }
        let k_max = min_m / 2;
        let k_values: Vec<usize> = (1..)
            .map(|j| j * DEFAULT_K_STEP)
            .take_while(|&k| k <= k_max)
            .collect();
        if k_values.is_empty() {
            return Err(Error::Selection(format!(
                "smallest window holds {min_m} responses; too few for the default k grid"
            )));
        }
        Self::new(h_values, k_values)
    }

    pub fn h_values(&self) -> &[f64] {
        &self.h_values
    }

    pub fn k_values(&self) -> &[usize] {
        &self.k_values
    }

    /// `(h, k)` in evaluation order.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.h_values
            .iter()
            .flat_map(move |&h| self.k_values.iter().map(move |&k| (h, k)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    Heuristic,
    Oracle,
}

impl SelectionMode {
    pub fn name(self) -> &'static str {
        match self {
            SelectionMode::Heuristic => "heuristic",
            SelectionMode::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    EmptyWindow,
    KTooLarge,
    NotExtrapolation,
    DegenerateTailIndex,
    NonFinite,
    Invalid(String),
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::EmptyWindow => f.write_str("empty_window"),
            SkipReason::KTooLarge => f.write_str("k_too_large"),
            SkipReason::NotExtrapolation => f.write_str("not_extrapolation"),
            SkipReason::DegenerateTailIndex => f.write_str("degenerate_tail_index"),
            SkipReason::NonFinite => f.write_str("non_finite"),
            SkipReason::Invalid(msg) => write!(f, "invalid: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridEntry {
    pub h: f64,
    pub k: usize,
    pub criterion: Option<f64>,
    pub reason: Option<SkipReason>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub h: f64,
    pub k: usize,
    pub criterion: f64,
    pub mode: SelectionMode,
    pub table: Vec<GridEntry>,
}

impl SelectionResult {
    /// Criterion table as CSV: `h,k,criterion,feasible,reason`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io {
            path: "<criterion table>".into(),
            message: e.to_string(),
        };
        w.write_record(["h", "k", "criterion", "feasible", "reason"])
            .map_err(io)?;
        for e in &self.table {
            w.write_record([
                crate::sim::fmt_float(e.h),
                e.k.to_string(),
                e.criterion.map(crate::sim::fmt_float).unwrap_or_default(),
                e.criterion.is_some().to_string(),
                e.reason
                    .as_ref()
                    .map(ToString::to_string)
                    .unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<criterion table>".into(),
            message: e.to_string(),
        })
    }
}

/// `Δ(f, g) = (Σ_i (f_i - g_i)²)^{1/2}` over aligned design points.
pub fn dist_over_design(f: &[f64], g: &[f64]) -> Result<f64> {
    if f.len() != g.len() {
        return Err(Error::Structural(format!(
            "value vectors have lengths {} and {}",
            f.len(),
            g.len()
        )));
    }
    Ok(f.iter()
        .zip(g)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Slices around every design point for every grid radius.
struct Windows {
    by_h: Vec<Vec<std::result::Result<Slice, SkipReason>>>,
}

impl Windows {
    fn new(ds: &Dataset, dm: &DistanceMatrix, h_values: &[f64]) -> Self {
        let by_h = h_values
            .par_iter()
            .map(|&h| {
                (0..ds.n_curves())
                    .map(|i| dm.slice(ds, i, h).map_err(|e| skip_reason(&e)))
                    .collect()
            })
            .collect();
        Self { by_h }
    }
}

fn skip_reason(e: &Error) -> SkipReason {
    match e {
        Error::EmptyWindow { .. } => SkipReason::EmptyWindow,
        Error::Parameter(_) => SkipReason::KTooLarge,
        Error::NotExtrapolation { .. } => SkipReason::NotExtrapolation,
        other => SkipReason::Invalid(other.to_string()),
    }
}

fn q2_all(
    slices: &[std::result::Result<Slice, SkipReason>],
    alpha: f64,
    k: usize,
    w: &WeightFunction,
) -> std::result::Result<Vec<f64>, SkipReason> {
    let mut out = Vec::with_capacity(slices.len());
    for slice in slices {
        let slice = slice.as_ref().map_err(Clone::clone)?;
        if k >= slice.m() {
            return Err(SkipReason::KTooLarge);
        }
        let est = q2(slice, alpha, k, w).map_err(|e| skip_reason(&e))?;
        if est.extrapolation.is_some_and(|x| x.degenerate) {
            return Err(SkipReason::DegenerateTailIndex);
        }
        out.push(est.value);
    }
    Ok(out)
}

enum Counterpart<'a> {
    Zipf,
    Truth(&'a [f64]),
}

fn run_selection(
    ds: &Dataset,
    dm: &DistanceMatrix,
    alpha: f64,
    grid: &SelectionGrid,
    counterpart: Counterpart<'_>,
    mode: SelectionMode,
) -> Result<SelectionResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "order must lie in (0, 1), got {alpha}"
        )));
    }
    let windows = Windows::new(ds, dm, grid.h_values());
    let n_k = grid.k_values().len();
    let pairs: Vec<(usize, usize)> = (0..grid.h_values().len())
        .flat_map(|hi| (0..n_k).map(move |ki| (hi, ki)))
        .collect();
    let table: Vec<GridEntry> = pairs
        .par_iter()
        .map(|&(hi, ki)| {
            let h = grid.h_values()[hi];
            let k = grid.k_values()[ki];
            let slices = &windows.by_h[hi];
            let outcome = q2_all(slices, alpha, k, &WeightFunction::Hill).and_then(|hill| {
                let other = match counterpart {
                    Counterpart::Zipf => q2_all(slices, alpha, k, &WeightFunction::Zipf)?,
                    Counterpart::Truth(t) => t.to_vec(),
                };
                let d = dist_over_design(&hill, &other)
                    .map_err(|e| SkipReason::Invalid(e.to_string()))?;
                if d.is_finite() {
                    Ok(d)
                } else {
                    Err(SkipReason::NonFinite)
                }
            });
            match outcome {
                Ok(c) => GridEntry {
                    h,
                    k,
                    criterion: Some(c),
                    reason: None,
                },
                Err(r) => GridEntry {
                    h,
                    k,
                    criterion: None,
                    reason: Some(r),
                },
            }
        })
        .collect();

    let mut best: Option<&GridEntry> = None;
    for entry in &table {
        if let Some(c) = entry.criterion {
            if best.is_none_or(|b| c < b.criterion.unwrap_or(f64::INFINITY)) {
                best = Some(entry);
            }
        }
    }
    let best = best.ok_or_else(|| {
        Error::Selection(format!(
            "no feasible (h, k) pair among {} grid points at alpha = {alpha}",
            table.len()
        ))
    })?;
    Ok(SelectionResult {
        h: best.h,
        k: best.k,
        criterion: best.criterion.unwrap_or(f64::NAN),
        mode,
        table: table.clone(),
    })
}

pub fn select_heuristic(ds: &Dataset, alpha: f64, grid: &SelectionGrid) -> Result<SelectionResult> {
    let dm = DistanceMatrix::new(ds)?;
    select_heuristic_with(ds, &dm, alpha, grid)
}

pub fn select_heuristic_with(
    ds: &Dataset,
    dm: &DistanceMatrix,
    alpha: f64,
    grid: &SelectionGrid,
) -> Result<SelectionResult> {
    run_selection(
        ds,
        dm,
        alpha,
        grid,
        Counterpart::Zipf,
        SelectionMode::Heuristic,
    )
}

pub fn select_oracle(
    ds: &Dataset,
    alpha: f64,
    grid: &SelectionGrid,
    model: &ConditionalModel,
) -> Result<SelectionResult> {
    let dm = DistanceMatrix::new(ds)?;
    let truth = true_quantiles(ds, alpha, model)?;
    select_oracle_with(ds, &dm, alpha, grid, &truth)
}

/// Oracle selection against precomputed true quantiles at the design points.
pub fn select_oracle_with(
    ds: &Dataset,
    dm: &DistanceMatrix,
    alpha: f64,
    grid: &SelectionGrid,
    truth: &[f64],
) -> Result<SelectionResult> {
    if truth.len() != ds.n_curves() {
        return Err(Error::Structural(format!(
            "{} true quantiles for {} design points",
            truth.len(),
            ds.n_curves()
        )));
    }
    run_selection(
        ds,
        dm,
        alpha,
        grid,
        Counterpart::Truth(truth),
        SelectionMode::Oracle,
    )
}

pub fn true_quantiles(ds: &Dataset, alpha: f64, model: &ConditionalModel) -> Result<Vec<f64>> {
    ds.curves()
        .iter()
        .map(|x| model.quantile(alpha, x))
        .collect()
}

/// `q̂₂(α, x_i, W)` at every design point for one `(h, k)`.
pub fn estimates_at(
    ds: &Dataset,
    dm: &DistanceMatrix,
    alpha: f64,
    h: f64,
    k: usize,
    w: &WeightFunction,
) -> Result<Vec<f64>> {
    (0..ds.n_curves())
        .map(|i| {
            let slice = dm.slice(ds, i, h)?;
            Ok(q2(&slice, alpha, k, w)?.value)
        })
        .collect()
}
