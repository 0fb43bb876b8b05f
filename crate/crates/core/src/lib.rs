//! Extreme conditional quantiles of a positive response given a functional
//! covariate.
//!
//! Curves are compared with a second-difference semi-metric; the responses
//! of all design points within distance `h` of a target curve are pooled
//! into a [`Slice`]. From a slice, [`q1`] returns an order statistic when the
//! target order is inside the sample and [`q2`] extrapolates beyond it with a
//! weighted tail-index estimate ([`tail_index`]). [`select`] chooses `(h, k)`
//! and [`sim`] holds the synthetic study and the Monte Carlo checks.

pub mod error;
pub mod functional;
pub mod io;
pub mod models;
pub mod quad;
pub mod quantile;
pub mod select;
pub mod sim;
pub mod stats;
pub mod tailindex;

pub use error::{Error, Result};
pub use functional::{
    ball_proportion, extract_slice, extract_slice_with, pairwise_distance_grid, semi_metric_sq,
    Curve, Dataset, DistanceMatrix, SecondDifference, SemiMetric, Slice,
};
pub use models::{
    gamma_function, ln_gamma, sigma_scale, sigma_scale_for, ConditionalModel, EnergyMap, Family,
    Perturbation, RhoMap, SecondOrderInfo, TailIndexMap,
};
pub use quantile::{
    classify_situation, classify_situation_with, extrapolate, floor_count, q1, q2, Extrapolation,
    QuantileEstimate, Situation, DEFAULT_S1_THRESHOLD,
};
pub use select::{
    dist_over_design, estimates_at, select_heuristic, select_heuristic_with, select_oracle,
    select_oracle_with, true_quantiles, GridEntry, SelectionGrid, SelectionMode, SelectionResult,
    SkipReason,
};
pub use tailindex::{
    av_factor, tail_index, CustomWeight, TailEstimate, WeightFunction, WeightKind,
};
