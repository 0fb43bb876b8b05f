//! Weighted log-spacing estimators of the conditional tail index.
//!
//! ```text
//! γ̂(W) = Σ_{i=1}^{k} i log(Z_{m-i+1,m} / Z_{m-i,m}) W(i/k)  /  Σ_{i=1}^{k} W(i/k)
//! ```
//!
//! Constant weights give the Hill estimator, `W(s) = -log s` the Zipf
//! estimator. Both ratios are taken over the same discrete points `i/k`, so
//! weights never need renormalizing.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::functional::Slice;
use crate::quad::integrate_unit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightKind {
    Hill,
    Zipf,
    Custom,
}

impl WeightKind {
    pub fn name(self) -> &'static str {
        match self {
            WeightKind::Hill => "hill",
            WeightKind::Zipf => "zipf",
            WeightKind::Custom => "custom",
        }
    }
}

/// User-supplied weight on `(0, 1)` with its asymptotic variance factor.
#[derive(Clone)]
pub struct CustomWeight {
    name: String,
    rule: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    av: f64,
}

impl CustomWeight {
    /// Checks `∫ W = 1` (to 1e-6) and computes `∫ W²` by quadrature.
    pub fn new(
        name: impl Into<String>,
        rule: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let rule: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(rule);
        let mass = integrate_unit(|s| rule(s), 1e-10)?;
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "weight function must integrate to one on (0, 1), got {mass}"
            )));
        }
        let av = integrate_unit(|s| rule(s).powi(2), 1e-10)?;
        Ok(Self {
            name: name.into(),
            rule,
            av,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for CustomWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomWeight")
            .field("name", &self.name)
            .field("av", &self.av)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum WeightFunction {
    Hill,
    Zipf,
    Custom(CustomWeight),
}

impl WeightFunction {
    pub fn kind(&self) -> WeightKind {
        match self {
            WeightFunction::Hill => WeightKind::Hill,
            WeightFunction::Zipf => WeightKind::Zipf,
            WeightFunction::Custom(_) => WeightKind::Custom,
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            WeightFunction::Hill => 1.0,
            WeightFunction::Zipf => -s.ln(),
            WeightFunction::Custom(c) => (c.rule)(s),
        }
    }
}

impl std::str::FromStr for WeightFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hill" => Ok(WeightFunction::Hill),
            "zipf" => Ok(WeightFunction::Zipf),
            other => Err(Error::Config(format!(
                "unknown weight `{other}` (expected hill or zipf)"
            ))),
        }
    }
}

/// `AV(W) = ∫₀¹ W²(s) ds`.
pub fn av_factor(w: &WeightFunction) -> Result<f64> {
    Ok(match w {
        WeightFunction::Hill => 1.0,
        WeightFunction::Zipf => 2.0,
        WeightFunction::Custom(c) => c.av,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub gamma_hat: f64,
    pub k: usize,
    pub weight: WeightKind,
    pub m: usize,
    /// All top `k + 1` responses were equal; `gamma_hat` is then 0.
    pub degenerate: bool,
}

pub fn tail_index(slice: &Slice, k: usize, w: &WeightFunction) -> Result<TailEstimate> {
    let m = slice.m();
    if k == 0 || k >= m {
        return Err(Error::Parameter(format!(
            "k must satisfy 1 <= k <= m - 1 = {}, got {k}",
            m.saturating_sub(1)
        )));
    }
    let floor = slice.top(k + 1);
    if !(floor > 0.0) {
        return Err(Error::Domain(format!(
            "order statistic Z_(m-k,m) = {floor} is not positive"
        )));
    }
    let inv_k = 1.0 / k as f64;
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    let mut any_spacing = false;
    for i in 1..=k {
        let upper = slice.top(i);
        let lower = slice.top(i + 1);
        let spacing = (upper / lower).ln();
        any_spacing |= spacing != 0.0;
        let weight = w.eval(i as f64 * inv_k);
        numerator += i as f64 * spacing * weight;
        denominator += weight;
    }
    let base = TailEstimate {
        gamma_hat: 0.0,
        k,
        weight: w.kind(),
        m,
        degenerate: false,
    };
    if !any_spacing {
        return Ok(TailEstimate {
            degenerate: true,
            ..base
        });
    }
    if denominator == 0.0 || !denominator.is_finite() {
        return Err(Error::Parameter(format!(
            "weights at i/k for k = {k} sum to {denominator}"
        )));
    }
    Ok(TailEstimate {
        gamma_hat: numerator / denominator,
        ..base
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slice(values: &[f64]) -> Slice {
        Slice::from_responses("t", values.to_vec()).unwrap()
    }

    /// Direct summation over the descending sample.
    fn oracle(desc: &[f64], k: usize, w: impl Fn(f64) -> f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 1..=k {
            let wi = w(i as f64 / k as f64);
            num += i as f64 * (desc[i - 1] / desc[i]).ln() * wi;
            den += wi;
        }
        num / den
    }

    #[test]
    fn doubling_sequence_hill() {
        let s = slice(&[4.0, 16.0, 1.0, 8.0, 2.0]);
        let est = tail_index(&s, 4, &WeightFunction::Hill).unwrap();
        let expected = oracle(&[16.0, 8.0, 4.0, 2.0, 1.0], 4, |_| 1.0);
        assert!((expected - 2.5 * 2f64.ln()).abs() < 1e-15);
        assert!((est.gamma_hat - expected).abs() <= 1e-12 * expected);
        assert_eq!(est.k, 4);
        assert_eq!(est.m, 5);
        assert!(!est.degenerate);
    }

    #[test]
    fn doubling_sequence_zipf() {
        let s = slice(&[1.0, 2.0, 4.0, 8.0, 16.0]);
        let est = tail_index(&s, 4, &WeightFunction::Zipf).unwrap();
        let expected = oracle(&[16.0, 8.0, 4.0, 2.0, 1.0], 4, |u: f64| -u.ln());
        assert!((est.gamma_hat - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn equal_top_values_are_degenerate() {
        let s = slice(&[1.0, 3.0, 3.0, 3.0, 3.0]);
        let est = tail_index(&s, 3, &WeightFunction::Hill).unwrap();
        assert!(est.degenerate);
        assert_eq!(est.gamma_hat, 0.0);
    }

    #[test]
    fn k_range_and_positivity() {
        let s = slice(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            tail_index(&s, 0, &WeightFunction::Hill),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            tail_index(&s, 3, &WeightFunction::Hill),
            Err(Error::Parameter(_))
        ));
        let neg = slice(&[-1.0, 2.0, 3.0]);
        assert!(matches!(
            tail_index(&neg, 2, &WeightFunction::Hill),
            Err(Error::Domain(_))
        ));
        // single Zipf weight W(1) = 0
        assert!(matches!(
            tail_index(&s, 1, &WeightFunction::Zipf),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn pareto_plug_in_grid() {
        let m = 10_000;
        let gamma = 0.5;
        let values: Vec<f64> = (1..=m)
            .map(|i| (i as f64 / m as f64).powf(-gamma))
            .collect();
        let est = tail_index(&slice(&values), 100, &WeightFunction::Hill).unwrap();
        let mut desc = values.clone();
        desc.sort_by(|a, b| b.total_cmp(a));
        let direct = oracle(&desc, 100, |_| 1.0);
        assert!((est.gamma_hat - direct).abs() <= 1e-12 * direct);
        assert!((est.gamma_hat - gamma).abs() <= 0.02);
    }

    #[test]
    fn av_factors() {
        assert_eq!(av_factor(&WeightFunction::Hill).unwrap(), 1.0);
        assert_eq!(av_factor(&WeightFunction::Zipf).unwrap(), 2.0);
        // W(s) = (3/2)(1 - s²): ∫W = 1, ∫W² = (9/4)(1 - 2/3 + 1/5) = 6/5
        let w = CustomWeight::new("quadratic", |s| 1.5 * (1.0 - s * s)).unwrap();
        let av = av_factor(&WeightFunction::Custom(w)).unwrap();
        assert!((av - 1.2).abs() < 1e-8);
    }

    #[test]
    fn custom_weight_validation() {
        assert!(matches!(
            CustomWeight::new("half", |_| 0.5),
            Err(Error::Config(_))
        ));
        // ∫ s^(-1/2)/2 = 1 but ∫ W² diverges
        assert!(matches!(
            CustomWeight::new("spike", |s: f64| 0.5 / s.sqrt()),
            Err(Error::Config(_))
        ));
    }
}
