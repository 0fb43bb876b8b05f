//! TOML run configuration. Every table is optional; unknown keys are errors.
//!
//! ```toml
//! seed = 7
//! out = "results"
//!
//! [data]
//! curves = "curves.csv"
//! responses = "responses.csv"
//!
//! [estimate]
//! target = "c01"
//! alpha = [0.001]
//! h = 0.5          # omitted: chosen by heuristic selection
//! k = 20           # omitted: chosen by heuristic selection
//! weight = "zipf"
//!
//! [study]
//! n_curves = 16
//! replications = 100
//! alpha = [0.0033333333333, 0.002]
//!
//! [grid]
//! h_levels = [0.1, 0.5, 0.9]
//! k_values = [5, 10, 15]
//!
//! [validate]
//! suites = ["order_stat", "max_exceedance"]
//! tolerance = 0.01
//! ```

use std::path::{Path, PathBuf};

use condex::sim::{
    Claim, ExperimentConfig, ExtrapolationConfig, GridSpec, MaxExceedanceConfig, OrderStatConfig,
    S2Config, SuiteConfig, TailIndexConfig,
};
use condex::{Error, Family, Result, WeightFunction};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub estimate: EstimateSection,
    #[serde(default)]
    pub study: StudySection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub validate: ValidateSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub curves: Option<PathBuf>,
    pub responses: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub target: Option<String>,
    /// A one-row curves CSV holding a target that is not a design point.
    pub target_curve: Option<PathBuf>,
    pub alpha: Option<Vec<f64>>,
    pub h: Option<f64>,
    pub k: Option<usize>,
    pub weight: Option<String>,
    pub s1_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub n_curves: Option<usize>,
    pub n_responses: Option<usize>,
    pub grid_len: Option<usize>,
    pub replications: Option<usize>,
    pub alpha: Option<Vec<f64>>,
    pub y_values: Option<Vec<f64>>,
    pub s1_threshold: Option<f64>,
    pub hist_bins: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub h_levels: Option<Vec<f64>>,
    pub h_values: Option<Vec<f64>>,
    pub k_values: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    pub family: Option<String>,
    pub gamma: Option<f64>,
    pub rho: Option<f64>,
    pub suites: Option<Vec<String>>,
    pub tolerance: Option<f64>,
    pub order_stat: Option<OrderStatSection>,
    pub max_exceedance: Option<MaxExceedanceSection>,
    pub extrapolation: Option<ExtrapolationSection>,
    pub s2_contrast: Option<S2Section>,
    pub tail_index: Option<TailIndexSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderStatSection {
    pub m: Option<usize>,
    pub alpha: Option<f64>,
    pub replications: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxExceedanceSection {
    pub m: Option<usize>,
    pub c: Option<Vec<f64>>,
    pub tolerance: Option<Vec<f64>>,
    pub replications: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtrapolationSection {
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub replications: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct S2Section {
    pub m: Option<Vec<usize>>,
    pub c: Option<f64>,
    pub replications: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailIndexSection {
    pub m: Option<usize>,
    pub replications: Option<usize>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(config_err("at least one alpha is required"));
    }
    match alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        Some(a) => Err(config_err(format!("alpha {a} is outside (0, 1)"))),
        None => Ok(()),
    }
}

fn check_positive(name: &str, v: Option<usize>) -> Result<()> {
    match v {
        Some(0) => Err(config_err(format!("{name} must be positive"))),
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let g = &self.grid;
        if let Some(levels) = &g.h_levels {
            if let Some(p) = levels.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
                return Err(config_err(format!("h level {p} is outside (0, 1]")));
            }
        }
        if let Some(h) = &g.h_values {
            if let Some(v) = h.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                return Err(config_err(format!(
                    "radius {v} is not a finite non-negative number"
                )));
            }
        }
        if let Some(k) = &g.k_values {
            if k.contains(&0) {
                return Err(config_err("k values must be positive"));
            }
        }
        Ok(GridSpec {
            h_levels: g.h_levels.clone(),
            h_values: g.h_values.clone(),
            k_values: g.k_values.clone(),
        })
    }

    pub fn weight(&self) -> Result<WeightFunction> {
        self.estimate
            .weight
            .as_deref()
            .unwrap_or("zipf")
            .parse()
            .map_err(|_| config_err("weight must be `hill` or `zipf`"))
    }

    pub fn experiment(&self, seed: Option<u64>, alphas: &[f64]) -> Result<ExperimentConfig> {
        let s = &self.study;
        let mut cfg = ExperimentConfig::default();
        for (name, v) in [
            ("n_curves", s.n_curves),
            ("n_responses", s.n_responses),
            ("grid_len", s.grid_len),
            ("replications", s.replications),
            ("hist_bins", s.hist_bins),
        ] {
            check_positive(name, v)?;
        }
        cfg.n_curves = s.n_curves.unwrap_or(cfg.n_curves);
        cfg.n_responses = s.n_responses.unwrap_or(cfg.n_responses);
        cfg.grid_len = s.grid_len.unwrap_or(cfg.grid_len);
        cfg.replications = s.replications.unwrap_or(cfg.replications);
        cfg.hist_bins = s.hist_bins.unwrap_or(cfg.hist_bins);
        cfg.s1_threshold = s.s1_threshold.unwrap_or(cfg.s1_threshold);
        cfg.y_values = s.y_values.clone();
        if let Some(seed) = seed.or(self.seed) {
            cfg.base_seed = seed;
        }
        if !alphas.is_empty() {
            cfg.alphas = alphas.to_vec();
        } else if let Some(a) = &s.alpha {
            cfg.alphas = a.clone();
        }
        check_alphas(&cfg.alphas)?;
        cfg.grid = self.grid_spec()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn estimate_alphas(&self, flags: &[f64]) -> Result<Vec<f64>> {
        let alphas = if !flags.is_empty() {
            flags.to_vec()
        } else {
            self.estimate
                .alpha
                .clone()
                .ok_or_else(|| config_err("estimate needs --alpha or estimate.alpha"))?
        };
        check_alphas(&alphas)?;
        if let Some(h) = self.estimate.h {
            if !(h >= 0.0 && h.is_finite()) {
                return Err(config_err(format!(
                    "radius {h} is not a finite non-negative number"
                )));
            }
        }
        check_positive("k", self.estimate.k)?;
        Ok(alphas)
    }

    pub fn suite(&self, seed: Option<u64>, tolerance: Option<f64>) -> Result<SuiteConfig> {
        let v = &self.validate;
        let mut cfg = SuiteConfig::default();
        if let Some(f) = &v.family {
            cfg.family = f.parse::<Family>()?;
        }
        cfg.gamma = v.gamma.unwrap_or(cfg.gamma);
        if !(cfg.gamma > 0.0 && cfg.gamma.is_finite()) {
            return Err(config_err(format!(
                "gamma must be positive, got {}",
                cfg.gamma
            )));
        }
        cfg.rho = v.rho.unwrap_or(cfg.rho);
        if !(cfg.rho < 0.0) {
            return Err(config_err(format!("rho must be negative, got {}", cfg.rho)));
        }
        if let Some(seed) = seed.or(self.seed) {
            cfg.seed = seed;
        }
        if let Some(names) = &v.suites {
            cfg.claims = names
                .iter()
                .map(|n| n.parse::<Claim>())
                .collect::<Result<_>>()?;
        }
        cfg.tolerance_override = tolerance.or(v.tolerance);
        if let Some(t) = cfg.tolerance_override {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(config_err(format!("tolerance {t} must be non-negative")));
            }
        }
        if let Some(t) = &v.order_stat {
            let d = OrderStatConfig::default();
            check_positive("order_stat.m", t.m)?;
            check_positive("order_stat.replications", t.replications)?;
            cfg.order_stat = OrderStatConfig {
                m: t.m.unwrap_or(d.m),
                alpha: t.alpha.unwrap_or(d.alpha),
                replications: t.replications.unwrap_or(d.replications),
                ..d
            };
            check_alphas(&[cfg.order_stat.alpha])?;
        }
        if let Some(p) = &v.max_exceedance {
            let d = MaxExceedanceConfig::default();
            check_positive("max_exceedance.m", p.m)?;
            check_positive("max_exceedance.replications", p.replications)?;
            let cases = match (&p.c, &p.tolerance) {
                (None, None) => d.cases,
                (Some(c), Some(t)) if c.len() == t.len() => {
                    c.iter().cloned().zip(t.iter().cloned()).collect()
                }
                (Some(c), None) => c.iter().map(|&c| (c, 0.02)).collect(),
                _ => {
                    return Err(config_err(
                        "max_exceedance.c and max_exceedance.tolerance must have equal length",
                    ))
                }
            };
            if let Some((c, _)) = cases.iter().find(|(c, _)| !(*c > 0.0)) {
                return Err(config_err(format!(
                    "max_exceedance.c must be positive, got {c}"
                )));
            }
            cfg.max_exceedance = MaxExceedanceConfig {
                m: p.m.unwrap_or(d.m),
                cases,
                replications: p.replications.unwrap_or(d.replications),
            };
        }
        if let Some(c) = &v.extrapolation {
            let d = ExtrapolationConfig::default();
            check_positive("extrapolation.m", c.m)?;
            check_positive("extrapolation.k", c.k)?;
            check_positive("extrapolation.replications", c.replications)?;
            cfg.extrapolation = ExtrapolationConfig {
                m: c.m.unwrap_or(d.m),
                k: c.k.unwrap_or(d.k),
                alpha: c.alpha.unwrap_or(d.alpha),
                replications: c.replications.unwrap_or(d.replications),
                ..d
            };
            check_alphas(&[cfg.extrapolation.alpha])?;
        }
        if let Some(s) = &v.s2_contrast {
            let d = S2Config::default();
            check_positive("s2_contrast.replications", s.replications)?;
            cfg.s2 = S2Config {
                ms: s.m.clone().unwrap_or(d.ms),
                c: s.c.unwrap_or(d.c),
                replications: s.replications.unwrap_or(d.replications),
                ..d
            };
        }
        if let Some(t) = &v.tail_index {
            let d = TailIndexConfig::default();
            check_positive("tail_index.m", t.m)?;
            check_positive("tail_index.replications", t.replications)?;
            cfg.tail_index = TailIndexConfig {
                m: t.m.unwrap_or(d.m),
                replications: t.replications.unwrap_or(d.replications),
                ..d
            };
        }
        Ok(cfg)
    }
}
