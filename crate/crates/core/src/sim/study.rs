use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functional::{pairwise_distance_grid, Curve, Dataset, DistanceMatrix};
use crate::models::ConditionalModel;
use crate::quantile::DEFAULT_S1_THRESHOLD;
use crate::select::{
    dist_over_design, estimates_at, select_heuristic_with, select_oracle_with, SelectionGrid,
    SelectionResult, DEFAULT_H_LEVELS, DEFAULT_K_STEP,
};
use crate::stats::{empirical_quantile, histogram, mean, spearman};
use crate::tailindex::WeightFunction;

use super::curves::{
    default_y_values, generate_curves, perturbed_frechet_model, responses_from_model,
};
use super::derive_seed;

/// How the `(h, k)` grid is built. Unset fields fall back to the defaults:
/// radii at pairwise-distance quantiles 0.1..0.9, `k` in steps of 5 up to
/// half the smallest window.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridSpec {
    pub h_levels: Option<Vec<f64>>,
    pub h_values: Option<Vec<f64>>,
    pub k_values: Option<Vec<usize>>,
}

impl GridSpec {
    pub fn resolve(&self, ds: &Dataset) -> Result<SelectionGrid> {
        let h_values = match (&self.h_values, &self.h_levels) {
            (Some(h), _) => h.clone(),
            (None, Some(levels)) => pairwise_distance_grid(ds, levels)?,
            (None, None) => pairwise_distance_grid(ds, &DEFAULT_H_LEVELS)?,
        };
        let k_values = match &self.k_values {
            Some(k) => k.clone(),
            None => {
                let smallest = h_values.iter().cloned().fold(f64::INFINITY, f64::min);
                let dm = DistanceMatrix::new(ds)?;
                let min_m = (0..ds.n_curves())
                    .map(|i| dm.slice(ds, i, smallest).map(|s| s.m()))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .min()
                    .unwrap_or(0);
                (1..)
                    .map(|j| j * DEFAULT_K_STEP)
                    .take_while(|&k| k <= min_m / 2)
                    .collect()
            }
        };
        SelectionGrid::new(h_values, k_values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_curves: usize,
    pub n_responses: usize,
    pub grid_len: usize,
    pub replications: usize,
    pub alphas: Vec<f64>,
    pub base_seed: u64,
    /// Defaults to [`default_y_values`].
    pub y_values: Option<Vec<f64>>,
    pub grid: GridSpec,
    pub s1_threshold: f64,
    pub hist_bins: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_curves: 16,
            n_responses: 100,
            grid_len: 256,
            replications: 100,
            alphas: vec![1.0 / 300.0, 1.0 / 500.0],
            base_seed: 1,
            y_values: None,
            grid: GridSpec::default(),
            s1_threshold: DEFAULT_S1_THRESHOLD,
            hist_bins: 20,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_curves < 2 || self.n_responses < 1 || self.grid_len < 3 || self.replications < 1 {
            return Err(Error::Config(
                "need n_curves >= 2, n_responses >= 1, grid_len >= 3 and replications >= 1".into(),
            ));
        }
        if self.alphas.is_empty() {
            return Err(Error::Config(
                "at least one target order is required".into(),
            ));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::Config(format!("target order {a} is outside (0, 1)")));
        }
        if let Some(y) = &self.y_values {
            if y.len() != self.n_curves {
                return Err(Error::Config(format!(
                    "{} y values for {} curves",
                    y.len(),
                    self.n_curves
                )));
            }
            if let Some(v) = y.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
                return Err(Error::Config(format!("y value {v} is outside (0, 1)")));
            }
        }
        if self.hist_bins == 0 {
            return Err(Error::Config("histogram needs at least one bin".into()));
        }
        Ok(())
    }

    pub fn y_values(&self) -> Vec<f64> {
        self.y_values
            .clone()
            .unwrap_or_else(|| default_y_values(self.n_curves))
    }

    /// Selection is run once, at the largest target order.
    pub fn reference_alpha(&self) -> f64 {
        self.alphas
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedPair {
    pub h: f64,
    pub k: usize,
    pub criterion: f64,
}

impl From<&SelectionResult> for SelectedPair {
    fn from(r: &SelectionResult) -> Self {
        Self {
            h: r.h,
            k: r.k,
            criterion: r.criterion,
        }
    }
}

/// Estimates at every design point for one target order. `heuristic` and
/// `oracle` are Zipf-weighted; the `_hill` variants use Hill weights with
/// the same selected pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaEstimates {
    pub alpha: f64,
    pub heuristic: Vec<f64>,
    pub oracle: Vec<f64>,
    pub heuristic_hill: Vec<f64>,
    pub oracle_hill: Vec<f64>,
    pub error_heuristic: f64,
    pub error_oracle: f64,
    pub error_heuristic_hill: f64,
    pub error_oracle_hill: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationReport {
    pub index: usize,
    pub heuristic: SelectedPair,
    pub oracle: SelectedPair,
    pub per_alpha: Vec<AlphaEstimates>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveInterval {
    pub curve: usize,
    pub id: String,
    pub gamma: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramRow {
    pub mode: &'static str,
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSummary {
    pub alpha: f64,
    pub histogram: Vec<HistogramRow>,
    /// Empirical 90% intervals of the heuristic estimates, ascending in γ.
    pub intervals: Vec<CurveInterval>,
    /// Position in [`StudyOutput::reports`] of the lower-median heuristic error.
    pub median_report: Option<usize>,
    pub mean_error_heuristic: f64,
    pub mean_error_oracle: f64,
    pub mean_error_heuristic_hill: f64,
    pub mean_error_oracle_hill: f64,
    pub p95_error_heuristic: f64,
    pub p95_error_oracle: f64,
    /// Spearman correlation between γ(x_i) and interval width.
    pub spearman_gamma_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySummary {
    pub per_alpha: Vec<AlphaSummary>,
}

#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub config: ExperimentConfig,
    pub curves: Vec<Curve>,
    pub model: ConditionalModel,
    pub gammas: Vec<f64>,
    pub energies: Vec<f64>,
    /// True quantiles, one vector per target order.
    pub truth: Vec<Vec<f64>>,
    pub grid: SelectionGrid,
    pub reports: Vec<ReplicationReport>,
    pub aborted: Vec<(usize, String)>,
    pub summary: StudySummary,
}

/// One pass/fail check on the study outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyCheck {
    pub check: &'static str,
    pub alpha: Option<f64>,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl StudyOutput {
    /// More than 10% of replications aborted.
    pub fn failed(&self) -> bool {
        self.aborted.len() * 10 > self.config.replications
    }

    /// Qualitative claims of the study, evaluated per target order:
    /// mean heuristic error at most twice the oracle's, heavier heuristic
    /// upper tail, positive rank correlation between γ and interval width,
    /// and oracle dominance on Hill-weighted errors.
    pub fn checks(&self) -> Vec<StudyCheck> {
        let aborted = self.aborted.len() as f64 / self.config.replications as f64;
        let mut out = vec![StudyCheck {
            check: "aborted_fraction",
            alpha: None,
            statistic: aborted,
            threshold: 0.1,
            pass: !self.failed(),
        }];
        for (ai, s) in self.summary.per_alpha.iter().enumerate() {
            let ratio = s.mean_error_heuristic / s.mean_error_oracle;
            out.push(StudyCheck {
                check: "mean_error_ratio",
                alpha: Some(s.alpha),
                statistic: ratio,
                threshold: 2.0,
                pass: ratio <= 2.0,
            });
            out.push(StudyCheck {
                check: "p95_error_heuristic",
                alpha: Some(s.alpha),
                statistic: s.p95_error_heuristic,
                threshold: s.p95_error_oracle,
                pass: s.p95_error_heuristic >= s.p95_error_oracle,
            });
            out.push(StudyCheck {
                check: "spearman_gamma_width",
                alpha: Some(s.alpha),
                statistic: s.spearman_gamma_width,
                threshold: 0.0,
                pass: s.spearman_gamma_width > 0.0,
            });
            let excess = self
                .reports
                .iter()
                .map(|r| r.per_alpha[ai].error_oracle_hill - r.per_alpha[ai].error_heuristic_hill)
                .fold(f64::NEG_INFINITY, f64::max);
            // dominance holds at the order used for selection
            if s.alpha == self.config.reference_alpha() {
                out.push(StudyCheck {
                    check: "oracle_hill_dominance",
                    alpha: Some(s.alpha),
                    statistic: excess,
                    threshold: 0.0,
                    pass: excess <= 0.0,
                });
            }
        }
        out
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks().iter().all(|c| c.pass)
    }
}

struct Fixed<'a> {
    cfg: &'a ExperimentConfig,
    curves: &'a [Curve],
    model: &'a ConditionalModel,
    truth: &'a [Vec<f64>],
    grid: &'a SelectionGrid,
    dm: &'a DistanceMatrix,
}

fn run_replication(fixed: &Fixed<'_>, index: usize) -> Result<ReplicationReport> {
    let cfg = fixed.cfg;
    let seed = derive_seed(cfg.base_seed, index, 0);
    let ds = responses_from_model(fixed.model, fixed.curves, cfg.n_responses, seed)?;
    let reference = cfg.reference_alpha();
    let ref_pos = cfg.alphas.iter().position(|&a| a == reference).unwrap_or(0);

    let heuristic = select_heuristic_with(&ds, fixed.dm, reference, fixed.grid)?;
    let oracle = select_oracle_with(&ds, fixed.dm, reference, fixed.grid, &fixed.truth[ref_pos])?;

    let mut per_alpha = Vec::with_capacity(cfg.alphas.len());
    for (&alpha, truth) in cfg.alphas.iter().zip(fixed.truth) {
        let est = |pair: &SelectionResult, w: &WeightFunction| {
            estimates_at(&ds, fixed.dm, alpha, pair.h, pair.k, w)
        };
        let h_z = est(&heuristic, &WeightFunction::Zipf)?;
        let o_z = est(&oracle, &WeightFunction::Zipf)?;
        let h_h = est(&heuristic, &WeightFunction::Hill)?;
        let o_h = est(&oracle, &WeightFunction::Hill)?;
        per_alpha.push(AlphaEstimates {
            alpha,
            error_heuristic: dist_over_design(&h_z, truth)?,
            error_oracle: dist_over_design(&o_z, truth)?,
            error_heuristic_hill: dist_over_design(&h_h, truth)?,
            error_oracle_hill: dist_over_design(&o_h, truth)?,
            heuristic: h_z,
            oracle: o_z,
            heuristic_hill: h_h,
            oracle_hill: o_h,
        });
    }
    Ok(ReplicationReport {
        index,
        heuristic: (&heuristic).into(),
        oracle: (&oracle).into(),
        per_alpha,
    })
}

fn summarize(
    cfg: &ExperimentConfig,
    curves: &[Curve],
    gammas: &[f64],
    reports: &[ReplicationReport],
) -> StudySummary {
    let per_alpha = cfg
        .alphas
        .iter()
        .enumerate()
        .map(|(ai, &alpha)| {
            let errs_h: Vec<f64> = reports
                .iter()
                .map(|r| r.per_alpha[ai].error_heuristic)
                .collect();
            let errs_o: Vec<f64> = reports
                .iter()
                .map(|r| r.per_alpha[ai].error_oracle)
                .collect();
            let errs_hh: Vec<f64> = reports
                .iter()
                .map(|r| r.per_alpha[ai].error_heuristic_hill)
                .collect();
            let errs_oh: Vec<f64> = reports
                .iter()
                .map(|r| r.per_alpha[ai].error_oracle_hill)
                .collect();
            if reports.is_empty() {
                return AlphaSummary {
                    alpha,
                    histogram: Vec::new(),
                    intervals: Vec::new(),
                    median_report: None,
                    mean_error_heuristic: f64::NAN,
                    mean_error_oracle: f64::NAN,
                    mean_error_heuristic_hill: f64::NAN,
                    mean_error_oracle_hill: f64::NAN,
                    p95_error_heuristic: f64::NAN,
                    p95_error_oracle: f64::NAN,
                    spearman_gamma_width: f64::NAN,
                };
            }

            let lo = errs_h
                .iter()
                .chain(&errs_o)
                .cloned()
                .fold(f64::INFINITY, f64::min);
            let hi = errs_h
                .iter()
                .chain(&errs_o)
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            let mut rows = Vec::new();
            for (mode, errs) in [("heuristic", &errs_h), ("oracle", &errs_o)] {
                for bin in histogram(errs, lo, hi, cfg.hist_bins) {
                    rows.push(HistogramRow {
                        mode,
                        low: bin.low,
                        high: bin.high,
                        count: bin.count,
                    });
                }
            }

            let mut intervals: Vec<CurveInterval> = curves
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let values: Vec<f64> = reports
                        .iter()
                        .map(|r| r.per_alpha[ai].heuristic[i])
                        .collect();
                    CurveInterval {
                        curve: i,
                        id: c.label().to_string(),
                        gamma: gammas[i],
                        low: empirical_quantile(&values, 0.05),
                        high: empirical_quantile(&values, 0.95),
                    }
                })
                .collect();
            let widths: Vec<f64> = intervals.iter().map(|iv| iv.high - iv.low).collect();
            let spearman_gamma_width = spearman(gammas, &widths);
            intervals.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(a.curve.cmp(&b.curve)));

            let mut order: Vec<usize> = (0..reports.len()).collect();
            order.sort_by(|&a, &b| errs_h[a].total_cmp(&errs_h[b]));
            let median_report = Some(order[(order.len() - 1) / 2]);

            AlphaSummary {
                alpha,
                histogram: rows,
                intervals,
                median_report,
                mean_error_heuristic: mean(&errs_h),
                mean_error_oracle: mean(&errs_o),
                mean_error_heuristic_hill: mean(&errs_hh),
                mean_error_oracle_hill: mean(&errs_oh),
                p95_error_heuristic: empirical_quantile(&errs_h, 0.95),
                p95_error_oracle: empirical_quantile(&errs_o, 0.95),
                spearman_gamma_width,
            }
        })
        .collect();
    StudySummary { per_alpha }
}

/// Replicated study on synthetic curves. Curves stay fixed; responses are
/// redrawn per replication. Replications run on the current rayon pool.
pub fn run_study(cfg: &ExperimentConfig) -> Result<StudyOutput> {
    cfg.validate()?;
    let curves = generate_curves(cfg.grid_len, cfg.n_curves, cfg.base_seed)?;
    let y_values = cfg.y_values();
    let model = perturbed_frechet_model(&curves, &y_values)?;
    let gammas = curves
        .iter()
        .map(|c| model.tail_index(c))
        .collect::<Result<Vec<_>>>()?;
    let energies: Vec<f64> = curves.iter().map(Curve::energy).collect();
    let truth = cfg
        .alphas
        .iter()
        .map(|&a| curves.iter().map(|c| model.quantile(a, c)).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;

    // grid depends only on the fixed curves and response counts
    let shape = Dataset::new(
        curves.clone(),
        vec![vec![1.0; cfg.n_responses]; curves.len()],
    )?;
    let grid = cfg.grid.resolve(&shape)?;
    let dm = DistanceMatrix::new(&shape)?;

    let fixed = Fixed {
        cfg,
        curves: &curves,
        model: &model,
        truth: &truth,
        grid: &grid,
        dm: &dm,
    };
    let outcomes: Vec<Result<ReplicationReport>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(&fixed, r))
        .collect();

    let mut reports = Vec::new();
    let mut aborted = Vec::new();
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(rep) => reports.push(rep),
            Err(e) => aborted.push((r, e.to_string())),
        }
    }
    let summary = summarize(cfg, &curves, &gammas, &reports);
    Ok(StudyOutput {
        config: cfg.clone(),
        curves,
        model,
        gammas,
        energies,
        truth,
        grid,
        reports,
        aborted,
        summary,
    })
}
