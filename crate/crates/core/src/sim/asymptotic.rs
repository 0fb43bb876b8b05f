//! Monte Carlo checks of the limit laws on a single design point, where the
//! window has no covariate oscillation and the conditional results reduce
//! to their unconditional form.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functional::{Curve, Slice};
use crate::models::{ConditionalModel, Family, RhoMap, TailIndexMap};
use crate::quantile::{q1, q2};
use crate::stats::{mean, std_dev, variance};
use crate::tailindex::{av_factor, tail_index, WeightFunction};

use super::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Claim {
    /// Asymptotic normality of the order-statistic estimator (S1).
    OrderStat,
    /// `P(Z_max < q(α)) → e^{-c}` when `mα → c`.
    MaxExceedance,
    /// Asymptotic normality of the extrapolated estimator.
    Extrapolation,
    /// Fixed `mα`: the order statistic does not concentrate, the extrapolation does.
    S2Contrast,
    /// Hill consistency and Hill/Zipf asymptotic variances.
    TailIndex,
}

impl Claim {
    pub const ALL: [Claim; 5] = [
        Claim::OrderStat,
        Claim::MaxExceedance,
        Claim::Extrapolation,
        Claim::S2Contrast,
        Claim::TailIndex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Claim::OrderStat => "order_stat",
            Claim::MaxExceedance => "max_exceedance",
            Claim::Extrapolation => "extrapolation",
            Claim::S2Contrast => "s2_contrast",
            Claim::TailIndex => "tail_index",
        }
    }

    fn stream(self) -> u64 {
        match self {
            Claim::OrderStat => 1,
            Claim::MaxExceedance => 2,
            Claim::Extrapolation => 3,
            Claim::S2Contrast => 4,
            Claim::TailIndex => 5,
        }
    }
}

impl std::str::FromStr for Claim {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Claim::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderStatConfig {
    pub m: usize,
    pub alpha: f64,
    pub replications: usize,
    pub mean_tolerance: f64,
    pub sd_relative_tolerance: f64,
}

impl Default for OrderStatConfig {
    fn default() -> Self {
        Self {
            m: 10_000,
            alpha: 0.01,
            replications: 2000,
            mean_tolerance: 0.05,
            sd_relative_tolerance: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxExceedanceConfig {
    pub m: usize,
    /// `(c, tolerance)` pairs; `α = c / m`.
    pub cases: Vec<(f64, f64)>,
    pub replications: usize,
}

impl Default for MaxExceedanceConfig {
    fn default() -> Self {
        Self {
            m: 10_000,
            cases: vec![(0.5, 0.02), (2.0, 0.01)],
            replications: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolationConfig {
    pub m: usize,
    pub k: usize,
    pub alpha: f64,
    pub replications: usize,
    pub sd_relative_tolerance: f64,
    pub ratio_bounds: (f64, f64),
}

impl Default for ExtrapolationConfig {
    fn default() -> Self {
        Self {
            m: 10_000,
            k: 100,
            alpha: 1e-5,
            replications: 2000,
            sd_relative_tolerance: 0.15,
            ratio_bounds: (1.6, 2.4),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct S2Config {
    pub ms: Vec<usize>,
    /// Fixed `mα`.
    pub c: f64,
    /// `k = ⌊m^exponent⌋` for the extrapolated estimator.
    pub k_exponent: f64,
    pub replications: usize,
    pub q1_sd_min: f64,
}

impl Default for S2Config {
    fn default() -> Self {
        Self {
            ms: vec![1_000, 10_000, 100_000],
            c: 2.0,
            k_exponent: 0.6,
            replications: 1000,
            q1_sd_min: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailIndexConfig {
    pub m: usize,
    pub k_exponent: f64,
    pub replications: usize,
    pub hill_mae_max: f64,
    pub variance_relative_tolerance: f64,
    pub ratio_bounds: (f64, f64),
}

impl Default for TailIndexConfig {
    fn default() -> Self {
        Self {
            m: 10_000,
            k_exponent: 0.6,
            replications: 500,
            hill_mae_max: 0.03,
            variance_relative_tolerance: 0.15,
            ratio_bounds: (1.6, 2.4),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub family: Family,
    pub gamma: f64,
    /// Burr only.
    pub rho: f64,
    pub seed: u64,
    pub claims: Vec<Claim>,
    pub order_stat: OrderStatConfig,
    pub max_exceedance: MaxExceedanceConfig,
    pub extrapolation: ExtrapolationConfig,
    pub s2: S2Config,
    pub tail_index: TailIndexConfig,
    /// Replaces every two-sided tolerance by `override * |target|`.
    pub tolerance_override: Option<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            family: Family::Pareto,
            gamma: 0.5,
            rho: -1.0,
            seed: 1,
            claims: Claim::ALL.to_vec(),
            order_stat: OrderStatConfig::default(),
            max_exceedance: MaxExceedanceConfig::default(),
            extrapolation: ExtrapolationConfig::default(),
            s2: S2Config::default(),
            tail_index: TailIndexConfig::default(),
            tolerance_override: None,
        }
    }
}

impl SuiteConfig {
    pub fn only(mut self, claims: &[Claim]) -> Self {
        self.claims = claims.to_vec();
        self
    }

    fn model(&self) -> ConditionalModel {
        let gamma = TailIndexMap::Constant(self.gamma);
        match self.family {
            Family::Pareto => ConditionalModel::pareto(gamma),
            Family::Frechet => ConditionalModel::frechet(gamma),
            Family::Burr => ConditionalModel::burr(gamma, RhoMap::Constant(self.rho)),
        }
    }
}

/// How a row's statistic is judged against its target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    /// `|statistic - target| <= tolerance`
    Within,
    /// `statistic >= target`
    AtLeast,
    /// `statistic <= target`
    AtMost,
    /// `statistic < target`
    Below,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticRow {
    pub claim: String,
    pub m: usize,
    pub statistic: f64,
    pub target: f64,
    pub tolerance: f64,
    pub rule: Rule,
    pub pass: bool,
}

struct RowBuilder<'a> {
    cfg: &'a SuiteConfig,
    rows: Vec<AsymptoticRow>,
}

impl RowBuilder<'_> {
    fn push(
        &mut self,
        claim: String,
        m: usize,
        statistic: f64,
        target: f64,
        tolerance: f64,
        rule: Rule,
    ) {
        let tolerance = match (rule, self.cfg.tolerance_override) {
            (Rule::Within, Some(rel)) => rel * target.abs(),
            _ => tolerance,
        };
        let pass = statistic.is_finite()
            && match rule {
                Rule::Within => (statistic - target).abs() <= tolerance,
                Rule::AtLeast => statistic >= target,
                Rule::AtMost => statistic <= target,
                Rule::Below => statistic < target,
            };
        self.rows.push(AsymptoticRow {
            claim,
            m,
            statistic,
            target,
            tolerance,
            rule,
            pass,
        });
    }
}

fn point() -> Curve {
    Curve::with_id("t", vec![0.0; 3]).expect("constant curve is valid")
}

/// Runs `f` on an independent sample of size `m` per replication, in parallel,
/// returning results in replication order.
fn replicate<T, F>(
    model: &ConditionalModel,
    m: usize,
    replications: usize,
    seed: u64,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Vec<f64>) -> Result<T> + Sync,
{
    let x = point();
    (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r, 0));
            let sample = model.sample_with(&x, m, &mut rng)?;
            f(sample)
        })
        .collect()
}

fn claim_seed(cfg: &SuiteConfig, claim: Claim, case: u64) -> u64 {
    cfg.seed
        .wrapping_add(claim.stream().wrapping_mul(1_000_000_000_000))
        .wrapping_add(case.wrapping_mul(10_000_000_000))
}

fn order_stat(cfg: &SuiteConfig, out: &mut RowBuilder<'_>) -> Result<()> {
    let t = &cfg.order_stat;
    let model = cfg.model();
    let truth = model.quantile(t.alpha, &point())?;
    let scale = (t.m as f64 * t.alpha).sqrt();
    let stats = replicate(
        &model,
        t.m,
        t.replications,
        claim_seed(cfg, Claim::OrderStat, 0),
        |s| {
            let slice = Slice::from_responses("t", s)?;
            Ok(scale * (q1(&slice, t.alpha)?.value / truth - 1.0))
        },
    )?;
    out.push(
        "order_stat_mean".into(),
        t.m,
        mean(&stats),
        0.0,
        t.mean_tolerance,
        Rule::Within,
    );
    out.push(
        "order_stat_sd".into(),
        t.m,
        std_dev(&stats),
        cfg.gamma,
        t.sd_relative_tolerance * cfg.gamma,
        Rule::Within,
    );
    Ok(())
}

fn max_exceedance(cfg: &SuiteConfig, out: &mut RowBuilder<'_>) -> Result<()> {
    let p = &cfg.max_exceedance;
    let model = cfg.model();
    for (case, &(c, tol)) in p.cases.iter().enumerate() {
        let alpha = c / p.m as f64;
        let truth = model.quantile(alpha, &point())?;
        let below = replicate(
            &model,
            p.m,
            p.replications,
            claim_seed(cfg, Claim::MaxExceedance, case as u64),
            |s| {
                let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                Ok(if max < truth { 1.0 } else { 0.0 })
            },
        )?;
        out.push(
            format!("max_exceedance_c{c}"),
            p.m,
            mean(&below),
            (-c).exp(),
            tol,
            Rule::Within,
        );
    }
    Ok(())
}

fn extrapolation(cfg: &SuiteConfig, out: &mut RowBuilder<'_>) -> Result<()> {
    let c = &cfg.extrapolation;
    let model = cfg.model();
    let truth = model.quantile(c.alpha, &point())?;
    let k = c.k as f64;
    let scale = k.sqrt() / (k / (c.m as f64 * c.alpha)).ln();
    let stats = replicate(
        &model,
        c.m,
        c.replications,
        claim_seed(cfg, Claim::Extrapolation, 0),
        |s| {
            let slice = Slice::from_responses("t", s)?;
            let hill = q2(&slice, c.alpha, c.k, &WeightFunction::Hill)?.value;
            let zipf = q2(&slice, c.alpha, c.k, &WeightFunction::Zipf)?.value;
            Ok((scale * (hill / truth - 1.0), scale * (zipf / truth - 1.0)))
        },
    )?;
    let (hill, zipf): (Vec<f64>, Vec<f64>) = stats.into_iter().unzip();
    for (name, values, w) in [
        ("extrapolation_sd_hill", &hill, WeightFunction::Hill),
        ("extrapolation_sd_zipf", &zipf, WeightFunction::Zipf),
    ] {
        let target = cfg.gamma * av_factor(&w)?.sqrt();
        out.push(
            name.into(),
            c.m,
            std_dev(values),
            target,
            c.sd_relative_tolerance * target,
            Rule::Within,
        );
    }
    let (lo, hi) = c.ratio_bounds;
    out.push(
        "extrapolation_variance_ratio".into(),
        c.m,
        variance(&zipf) / variance(&hill),
        0.5 * (lo + hi),
        0.5 * (hi - lo),
        Rule::Within,
    );
    Ok(())
}

fn s2_contrast(cfg: &SuiteConfig, out: &mut RowBuilder<'_>) -> Result<()> {
    let s2 = &cfg.s2;
    let model = cfg.model();
    let mut previous: Option<f64> = None;
    for (case, &m) in s2.ms.iter().enumerate() {
        let alpha = s2.c / m as f64;
        let k = (m as f64).powf(s2.k_exponent).floor() as usize;
        let truth = model.quantile(alpha, &point())?;
        let stats = replicate(
            &model,
            m,
            s2.replications,
            claim_seed(cfg, Claim::S2Contrast, case as u64),
            |s| {
                let slice = Slice::from_responses("t", s)?;
                let r1 = q1(&slice, alpha)?.value / truth - 1.0;
                let r2 = (q2(&slice, alpha, k, &WeightFunction::Hill)?.value / truth - 1.0).abs();
                Ok((r1, r2))
            },
        )?;
        let (r1, r2): (Vec<f64>, Vec<f64>) = stats.into_iter().unzip();
        out.push(
            "s2_q1_sd".into(),
            m,
            std_dev(&r1),
            s2.q1_sd_min,
            0.0,
            Rule::AtLeast,
        );
        let mae = mean(&r2);
        match previous {
            None => out.push("s2_q2_mae".into(), m, mae, f64::INFINITY, 0.0, Rule::Below),
            Some(prev) => out.push("s2_q2_mae".into(), m, mae, prev, 0.0, Rule::Below),
        }
        previous = Some(mae);
    }
    Ok(())
}

fn tail_index_checks(cfg: &SuiteConfig, out: &mut RowBuilder<'_>) -> Result<()> {
    let t = &cfg.tail_index;
    let model = cfg.model();
    let k = (t.m as f64).powf(t.k_exponent).floor() as usize;
    let gamma = cfg.gamma;
    let stats = replicate(
        &model,
        t.m,
        t.replications,
        claim_seed(cfg, Claim::TailIndex, 0),
        |s| {
            let slice = Slice::from_responses("t", s)?;
            let hill = tail_index(&slice, k, &WeightFunction::Hill)?.gamma_hat;
            let zipf = tail_index(&slice, k, &WeightFunction::Zipf)?.gamma_hat;
            Ok((hill, zipf))
        },
    )?;
    let (hill, zipf): (Vec<f64>, Vec<f64>) = stats.into_iter().unzip();
    let abs_err: Vec<f64> = hill.iter().map(|g| (g - gamma).abs()).collect();
    out.push(
        "tail_index_hill_mae".into(),
        t.m,
        mean(&abs_err),
        t.hill_mae_max,
        0.0,
        Rule::AtMost,
    );
    let root_k = (k as f64).sqrt();
    let normalized = |v: &[f64]| -> Vec<f64> { v.iter().map(|g| root_k * (g - gamma)).collect() };
    let var_hill = variance(&normalized(&hill));
    let var_zipf = variance(&normalized(&zipf));
    for (name, var, w) in [
        ("tail_index_variance_hill", var_hill, WeightFunction::Hill),
        ("tail_index_variance_zipf", var_zipf, WeightFunction::Zipf),
    ] {
        let target = gamma * gamma * av_factor(&w)?;
        out.push(
            name.into(),
            t.m,
            var,
            target,
            t.variance_relative_tolerance * target,
            Rule::Within,
        );
    }
    let (lo, hi) = t.ratio_bounds;
    out.push(
        "tail_index_variance_ratio".into(),
        t.m,
        var_zipf / var_hill,
        0.5 * (lo + hi),
        0.5 * (hi - lo),
        Rule::Within,
    );
    Ok(())
}

/// Runs the selected claims in order and returns one row per measured statistic.
pub fn run_asymptotic_suite(cfg: &SuiteConfig) -> Result<Vec<AsymptoticRow>> {
    if cfg.claims.is_empty() {
        return Err(Error::Config("no suite selected".into()));
    }
    if !(cfg.gamma > 0.0) {
        return Err(Error::Config(format!(
            "tail index must be positive, got {}",
            cfg.gamma
        )));
    }
    let mut out = RowBuilder {
        cfg,
        rows: Vec::new(),
    };
    for &claim in &cfg.claims {
        match claim {
            Claim::OrderStat => order_stat(cfg, &mut out)?,
            Claim::MaxExceedance => max_exceedance(cfg, &mut out)?,
            Claim::Extrapolation => extrapolation(cfg, &mut out)?,
            Claim::S2Contrast => s2_contrast(cfg, &mut out)?,
            Claim::TailIndex => tail_index_checks(cfg, &mut out)?,
        }
    }
    Ok(out.rows)
}
