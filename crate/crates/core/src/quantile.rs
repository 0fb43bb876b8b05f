//! Conditional extreme-quantile estimators on a slice.
//!
//! * [`q1`]: the order statistic `Z_{m-⌊mα⌋+1,m}`, usable while `⌊mα⌋ >= 1`.
//! * [`q2`]: Weissman-type extrapolation from the anchor `Z_{m-k+1,m}` at
//!   order `β = k/m`, `q̂₂ = Z_{m-k+1,m} (β/α)^γ̂`.

use crate::error::{Error, Result};
use crate::functional::Slice;
use crate::tailindex::{tail_index, WeightFunction, WeightKind};

/// Default `mα` cut between situations S1 and S2.
pub const DEFAULT_S1_THRESHOLD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Situation {
    /// `mα → ∞`: inside the sample.
    S1,
    /// `mα → c ∈ [1, ∞)`: near the sample boundary.
    S2,
    /// `mα → c ∈ [0, 1)`: possibly beyond the maximum.
    S3,
}

impl Situation {
    pub fn name(self) -> &'static str {
        match self {
            Situation::S1 => "S1",
            Situation::S2 => "S2",
            Situation::S3 => "S3",
        }
    }
}

pub fn classify_situation(m: usize, alpha: f64) -> Situation {
    classify_situation_with(m, alpha, DEFAULT_S1_THRESHOLD)
}

pub fn classify_situation_with(m: usize, alpha: f64, s1_threshold: f64) -> Situation {
    let expected = m as f64 * alpha;
    if expected >= s1_threshold {
        Situation::S1
    } else if expected >= 1.0 || floor_count(m, alpha) >= 1 {
        Situation::S2
    } else {
        Situation::S3
    }
}

/// `⌊mα⌋`, snapping products within 1e-9 of an integer (so `1000 * (2/1000)`
/// counts as 2).
pub fn floor_count(m: usize, alpha: f64) -> usize {
    let x = m as f64 * alpha;
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        x.floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    pub k: usize,
    /// Anchor order `β = k/m`.
    pub beta: f64,
    /// `q̂₁(β) = Z_{m-k+1,m}`.
    pub anchor: f64,
    pub gamma_hat: f64,
    pub weight: Option<WeightKind>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileEstimate {
    pub value: f64,
    pub alpha: f64,
    pub m: usize,
    pub situation: Situation,
    /// Present for the extrapolated estimator.
    pub extrapolation: Option<Extrapolation>,
}

fn check_order(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "order must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

pub fn q1(slice: &Slice, alpha: f64) -> Result<QuantileEstimate> {
    check_order(alpha)?;
    let m = slice.m();
    let j = floor_count(m, alpha).min(m);
    if j == 0 {
        return Err(Error::OrderBeyondSample { m, alpha });
    }
    Ok(QuantileEstimate {
        value: slice.order_stat(m - j + 1),
        alpha,
        m,
        situation: classify_situation(m, alpha),
        extrapolation: None,
    })
}

/// Extrapolated estimate with a given tail index (no weight attached).
pub fn extrapolate(
    slice: &Slice,
    alpha: f64,
    k: usize,
    gamma_hat: f64,
) -> Result<QuantileEstimate> {
    check_order(alpha)?;
    let m = slice.m();
    if k == 0 || k >= m {
        return Err(Error::Parameter(format!(
            "k must satisfy 1 <= k <= m - 1 = {}, got {k}",
            m.saturating_sub(1)
        )));
    }
    let beta = k as f64 / m as f64;
    if alpha > beta {
        return Err(Error::NotExtrapolation { alpha, beta });
    }
    let anchor = slice.top(k);
    Ok(QuantileEstimate {
        value: anchor * (beta / alpha).powf(gamma_hat),
        alpha,
        m,
        situation: classify_situation(m, alpha),
        extrapolation: Some(Extrapolation {
            k,
            beta,
            anchor,
            gamma_hat,
            weight: None,
            degenerate: false,
        }),
    })
}

pub fn q2(slice: &Slice, alpha: f64, k: usize, w: &WeightFunction) -> Result<QuantileEstimate> {
    check_order(alpha)?;
    let m = slice.m();
    if k == 0 || k >= m {
        return Err(Error::Parameter(format!(
            "k must satisfy 1 <= k <= m - 1 = {}, got {k}",
            m.saturating_sub(1)
        )));
    }
    let beta = k as f64 / m as f64;
    if alpha > beta {
        return Err(Error::NotExtrapolation { alpha, beta });
    }
    let tail = tail_index(slice, k, w)?;
    let mut est = extrapolate(slice, alpha, k, tail.gamma_hat)?;
    if let Some(ext) = est.extrapolation.as_mut() {
        ext.weight = Some(tail.weight);
        ext.degenerate = tail.degenerate;
    }
    Ok(est)
}
