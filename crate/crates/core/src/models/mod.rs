//! Heavy-tailed conditional models: Pareto, Fréchet and Burr quantile
//! functions with covariate-dependent tail index, their second-order
//! function `Δ(α, x) = γ(x) + α ∂log q/∂α (α, x)`, and inverse-transform
//! samplers.
//!
//! Conventions, all for `α ∈ (0, 1)`:
//!
//! ```text
//! Pareto   q(α) = α^-γ
//! Fréchet  q(α) = (log 1/(1-α))^-γ
//! Burr     q(α) = α^-γ (1 - α^-ρ)^(-γ/ρ),  ρ < 0
//! ```
//!
//! A [`Perturbation`] turns the base law of `ε` into the law of
//! `Y = c(x) + σ (ε - Γ(1 - γ(x)))`, which is still heavy-tailed with the
//! same index; the decorated quantile is the estimation target.

mod special;

use std::collections::BTreeMap;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functional::{Curve, Dataset};

pub use special::{gamma_function, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Pareto,
    Frechet,
    Burr,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Pareto => "pareto",
            Family::Frechet => "frechet",
            Family::Burr => "burr",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pareto" => Ok(Family::Pareto),
            "frechet" | "fréchet" => Ok(Family::Frechet),
            "burr" => Ok(Family::Burr),
            other => Err(Error::Config(format!("unknown model family `{other}`"))),
        }
    }
}

/// Affine map of normalized squared energy:
/// `γ(x) = scale * (‖x‖² - min) / (max - min) + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyMap {
    pub scale: f64,
    pub offset: f64,
    pub min_energy: f64,
    pub max_energy: f64,
}

impl EnergyMap {
    pub const DEFAULT_SCALE: f64 = 0.3;
    pub const DEFAULT_OFFSET: f64 = 0.2;

    pub fn new(scale: f64, offset: f64, min_energy: f64, max_energy: f64) -> Result<Self> {
        if !(max_energy > min_energy) {
            return Err(Error::Config(format!(
                "energy range is degenerate: min = {min_energy}, max = {max_energy}"
            )));
        }
        if !(offset > 0.0) || !(scale >= 0.0) {
            return Err(Error::Config(format!(
                "energy map needs offset > 0 and scale >= 0, got scale = {scale}, offset = {offset}"
            )));
        }
        Ok(Self {
            scale,
            offset,
            min_energy,
            max_energy,
        })
    }

    /// The 0.3/0.2 map fitted to the energy range of `curves`.
    pub fn from_curves(curves: &[Curve]) -> Result<Self> {
        let (min, max) = curves
            .iter()
            .map(Curve::energy)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
                (lo.min(e), hi.max(e))
            });
        Self::new(Self::DEFAULT_SCALE, Self::DEFAULT_OFFSET, min, max)
    }

    pub fn eval(&self, x: &Curve) -> Result<f64> {
        if !(self.max_energy > self.min_energy) {
            return Err(Error::Config("energy range is degenerate".into()));
        }
        let normalized = (x.energy() - self.min_energy) / (self.max_energy - self.min_energy);
        Ok(self.scale * normalized + self.offset)
    }
}

/// Covariate-to-tail-index rule.
#[derive(Debug, Clone, PartialEq)]
pub enum TailIndexMap {
    Constant(f64),
    Energy(EnergyMap),
}

impl TailIndexMap {
    pub fn eval(&self, x: &Curve) -> Result<f64> {
        let gamma = match self {
            TailIndexMap::Constant(g) => *g,
            TailIndexMap::Energy(map) => map.eval(x)?,
        };
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!(
                "tail index must be positive, got {gamma} at curve {}",
                x.label()
            )));
        }
        Ok(gamma)
    }
}

pub fn gamma_map_eval(map: &TailIndexMap, x: &Curve) -> Result<f64> {
    map.eval(x)
}

/// Second-order parameter per covariate (Burr only).
#[derive(Debug, Clone, PartialEq)]
pub enum RhoMap {
    Constant(f64),
    /// Keyed by curve identifier.
    PerCurve(BTreeMap<String, f64>),
}

impl RhoMap {
    pub fn eval(&self, x: &Curve) -> Result<f64> {
        let rho = match self {
            RhoMap::Constant(r) => *r,
            RhoMap::PerCurve(map) => *x.id().and_then(|id| map.get(id)).ok_or_else(|| {
                Error::Config(format!("no second-order parameter for curve {}", x.label()))
            })?,
        };
        if !(rho < 0.0) || !rho.is_finite() {
            return Err(Error::Config(format!(
                "Burr second-order parameter must be negative, got {rho}"
            )));
        }
        Ok(rho)
    }
}

/// `Y = center(x) + sigma * (ε - Γ(1 - γ(x)))`, with centers keyed by curve id.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub sigma: f64,
    pub centers: BTreeMap<String, f64>,
}

impl Perturbation {
    fn center(&self, x: &Curve) -> Result<f64> {
        x.id()
            .and_then(|id| self.centers.get(id))
            .copied()
            .ok_or_else(|| Error::Config(format!("no response center for curve {}", x.label())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderInfo {
    /// `Δ(a, x)`
    pub delta: f64,
    /// `sup_{α ∈ (0, a)} |Δ(α, x)|`
    pub delta_bar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalModel {
    pub family: Family,
    pub gamma: TailIndexMap,
    pub rho: Option<RhoMap>,
    pub perturbation: Option<Perturbation>,
}

/// Tail and second-order parameters resolved at one covariate.
#[derive(Debug, Clone, Copy)]
struct Params {
    gamma: f64,
    rho: f64,
}

fn check_order(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "order must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// `(1 - α) log(1/(1-α)) - α`, accurate for small `α`.
fn frechet_gap(alpha: f64) -> f64 {
    if alpha < 0.1 {
        // -Σ_{n>=2} α^n / (n (n - 1))
        let mut term = alpha;
        let mut sum = 0.0;
        for n in 2..200u32 {
            term *= alpha;
            let add = term / f64::from(n * (n - 1));
            sum += add;
            if add < sum * 1e-18 {
                break;
            }
        }
        -sum
    } else {
        (1.0 - alpha) * (-(-alpha).ln_1p()) - alpha
    }
}

impl ConditionalModel {
    pub fn pareto(gamma: TailIndexMap) -> Self {
        Self {
            family: Family::Pareto,
            gamma,
            rho: None,
            perturbation: None,
        }
    }

    pub fn frechet(gamma: TailIndexMap) -> Self {
        Self {
            family: Family::Frechet,
            gamma,
            rho: None,
            perturbation: None,
        }
    }

    pub fn burr(gamma: TailIndexMap, rho: RhoMap) -> Self {
        Self {
            family: Family::Burr,
            gamma,
            rho: Some(rho),
            perturbation: None,
        }
    }

    pub fn with_perturbation(mut self, perturbation: Perturbation) -> Self {
        self.perturbation = Some(perturbation);
        self
    }

    pub fn tail_index(&self, x: &Curve) -> Result<f64> {
        self.gamma.eval(x)
    }

    fn params(&self, x: &Curve) -> Result<Params> {
        let gamma = self.gamma.eval(x)?;
        let rho = match self.family {
            Family::Burr => self
                .rho
                .as_ref()
                .ok_or_else(|| {
                    Error::Config("Burr model requires a second-order parameter".into())
                })?
                .eval(x)?,
            Family::Frechet => -1.0,
            Family::Pareto => f64::NEG_INFINITY,
        };
        if self.perturbation.is_some() && gamma >= 1.0 {
            return Err(Error::Config(format!(
                "centered perturbation needs a finite mean (γ < 1), got γ = {gamma}"
            )));
        }
        Ok(Params { gamma, rho })
    }

    fn base_quantile(&self, p: Params, alpha: f64) -> f64 {
        match self.family {
            Family::Pareto => (-p.gamma * alpha.ln()).exp(),
            Family::Frechet => (-(-alpha).ln_1p()).powf(-p.gamma),
            Family::Burr => {
                let ln_q =
                    -p.gamma * alpha.ln() - (p.gamma / p.rho) * (-(alpha.powf(-p.rho))).ln_1p();
                ln_q.exp()
            }
        }
    }

    fn base_delta(&self, p: Params, alpha: f64) -> f64 {
        match self.family {
            Family::Pareto => 0.0,
            Family::Frechet => {
                let ln_inv = -(-alpha).ln_1p();
                p.gamma * frechet_gap(alpha) / ((1.0 - alpha) * ln_inv)
            }
            Family::Burr => {
                let x = alpha.powf(-p.rho);
                -p.gamma * x / (1.0 - x)
            }
        }
    }

    fn base_survival(&self, p: Params, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        match self.family {
            Family::Pareto => {
                if y <= 1.0 {
                    1.0
                } else {
                    y.powf(-1.0 / p.gamma)
                }
            }
            Family::Frechet => -(-y.powf(-1.0 / p.gamma)).exp_m1(),
            Family::Burr => (y.powf(-p.rho / p.gamma).ln_1p() / p.rho).exp(),
        }
    }

    /// Location and scale of the affine decoration at `x`: `Y = a + σ ε`.
    fn affine(&self, p: Params, x: &Curve) -> Result<Option<(f64, f64)>> {
        match &self.perturbation {
            None => Ok(None),
            Some(pert) => {
                let g = gamma_function(1.0 - p.gamma)?;
                Ok(Some((pert.center(x)? - pert.sigma * g, pert.sigma)))
            }
        }
    }

    /// Conditional quantile of order `1 - α` at `x`.
    pub fn quantile(&self, alpha: f64, x: &Curve) -> Result<f64> {
        check_order(alpha)?;
        let p = self.params(x)?;
        let base = self.base_quantile(p, alpha);
        Ok(match self.affine(p, x)? {
            None => base,
            Some((loc, scale)) => loc + scale * base,
        })
    }

    /// `Δ(α, x)` from closed-form derivatives of the log-quantile.
    pub fn delta(&self, alpha: f64, x: &Curve) -> Result<f64> {
        check_order(alpha)?;
        let p = self.params(x)?;
        let base_delta = self.base_delta(p, alpha);
        Ok(match self.affine(p, x)? {
            None => base_delta,
            Some((loc, scale)) => {
                // Δ = [γ loc + σ q_b Δ_b] / (loc + σ q_b)
                let qb = self.base_quantile(p, alpha);
                let q = loc + scale * qb;
                (p.gamma * loc + scale * qb * base_delta) / q
            }
        })
    }

    /// `Δ(a, x)` together with `sup_{α < a} |Δ(α, x)|`.
    pub fn second_order(&self, a: f64, x: &Curve) -> Result<SecondOrderInfo> {
        let delta = self.delta(a, x)?;
        let delta_bar = match (self.family, &self.perturbation) {
            (Family::Pareto, None) => 0.0,
            // |Δ(., x)| is increasing for the undecorated Fréchet and Burr laws
            (_, None) => delta.abs(),
            _ => {
                let mut sup = delta.abs();
                for i in 1..=400 {
                    let alpha = a * 10f64.powf(-12.0 * f64::from(i) / 400.0);
                    sup = sup.max(self.delta(alpha, x)?.abs());
                }
                sup
            }
        };
        Ok(SecondOrderInfo { delta, delta_bar })
    }

    /// `P(Y > y | x)`.
    pub fn survival(&self, y: f64, x: &Curve) -> Result<f64> {
        let p = self.params(x)?;
        Ok(match self.affine(p, x)? {
            None => self.base_survival(p, y),
            Some((loc, scale)) => self.base_survival(p, (y - loc) / scale),
        })
    }

    pub fn cdf(&self, y: f64, x: &Curve) -> Result<f64> {
        Ok(1.0 - self.survival(y, x)?)
    }

    /// `n` i.i.d. draws at `x`, reproducible from `seed`.
    pub fn sample(&self, x: &Curve, n: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(x, n, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(
        &self,
        x: &Curve,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let p = self.params(x)?;
        let affine = self.affine(p, x)?;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.sample(Open01);
            let eps = match self.family {
                Family::Frechet => (-u.ln()).powf(-p.gamma),
                _ => self.base_quantile(p, u),
            };
            out.push(match affine {
                None => eps,
                Some((loc, scale)) => loc + scale * eps,
            });
        }
        Ok(out)
    }
}

pub fn quantile(model: &ConditionalModel, alpha: f64, x: &Curve) -> Result<f64> {
    model.quantile(alpha, x)
}

pub fn delta(model: &ConditionalModel, alpha: f64, x: &Curve) -> Result<f64> {
    model.delta(alpha, x)
}

pub fn sample(model: &ConditionalModel, x: &Curve, n: usize, seed: u64) -> Result<Vec<f64>> {
    model.sample(x, n, seed)
}

/// `σ = min_i log(1/y_i) / Γ(1 - γ(x_i))`.
pub fn sigma_scale(ds: &Dataset, y_values: &[f64], map: &TailIndexMap) -> Result<f64> {
    sigma_scale_for(ds.curves(), y_values, map)
}

pub fn sigma_scale_for(curves: &[Curve], y_values: &[f64], map: &TailIndexMap) -> Result<f64> {
    if curves.len() != y_values.len() {
        return Err(Error::Structural(format!(
            "{} curves but {} y values",
            curves.len(),
            y_values.len()
        )));
    }
    if curves.is_empty() {
        return Err(Error::Structural("no curves".into()));
    }
    let mut sigma = f64::INFINITY;
    for (x, &y) in curves.iter().zip(y_values) {
        if !(y > 0.0 && y < 1.0) {
            return Err(Error::Domain(format!(
                "y value must lie in (0, 1), got {y}"
            )));
        }
        let gamma = map.eval(x)?;
        if gamma >= 1.0 {
            return Err(Error::Domain(format!(
                "Γ(1 - γ) needs γ < 1, got {gamma} at curve {}",
                x.label()
            )));
        }
        sigma = sigma.min((1.0 / y).ln() / gamma_function(1.0 - gamma)?);
    }
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point() -> Curve {
        Curve::with_id("x", vec![0.0, 1.0, 0.0]).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn table_quantiles() {
        let x = point();
        let pareto = ConditionalModel::pareto(TailIndexMap::Constant(0.5));
        assert!(close(pareto.quantile(0.01, &x).unwrap(), 10.0, 1e-14));

        let frechet = ConditionalModel::frechet(TailIndexMap::Constant(1.0));
        let alpha = 1.0 - (-1.0f64).exp();
        assert!(close(frechet.quantile(alpha, &x).unwrap(), 1.0, 1e-14));

        let burr = ConditionalModel::burr(TailIndexMap::Constant(1.0), RhoMap::Constant(-1.0));
        assert!(close(burr.quantile(0.5, &x).unwrap(), 1.0, 1e-14));
    }

    #[test]
    fn domain_and_configuration_errors() {
        let x = point();
        let pareto = ConditionalModel::pareto(TailIndexMap::Constant(0.5));
        assert!(matches!(pareto.quantile(0.0, &x), Err(Error::Domain(_))));
        assert!(matches!(pareto.quantile(1.0, &x), Err(Error::Domain(_))));
        let burr = ConditionalModel {
            family: Family::Burr,
            gamma: TailIndexMap::Constant(0.5),
            rho: None,
            perturbation: None,
        };
        assert!(matches!(burr.quantile(0.1, &x), Err(Error::Config(_))));
        let bad_rho = ConditionalModel::burr(TailIndexMap::Constant(0.5), RhoMap::Constant(0.5));
        assert!(matches!(bad_rho.quantile(0.1, &x), Err(Error::Config(_))));
    }

    #[test]
    fn pareto_delta_is_zero() {
        let x = point();
        let m = ConditionalModel::pareto(TailIndexMap::Constant(0.7));
        for &a in &[1e-9, 1e-3, 0.3, 0.99] {
            assert_eq!(m.delta(a, &x).unwrap(), 0.0);
        }
        assert_eq!(m.second_order(0.1, &x).unwrap().delta_bar, 0.0);
    }

    #[test]
    fn delta_leading_terms() {
        let x = point();
        let f = ConditionalModel::frechet(TailIndexMap::Constant(0.4));
        assert!(close(f.delta(1e-4, &x).unwrap(), -0.2 * 1e-4, 0.01));
        let b = ConditionalModel::burr(TailIndexMap::Constant(0.5), RhoMap::Constant(-1.0));
        assert!(close(b.delta(1e-3, &x).unwrap(), -0.5 * 1e-3, 0.01));
    }

    #[test]
    fn frechet_gap_branches_agree() {
        for &a in &[0.05, 0.099, 0.1, 0.101] {
            let direct = (1.0 - a) * (-(-a as f64).ln_1p()) - a;
            assert!(close(frechet_gap(a), direct, 1e-12), "a = {a}");
        }
    }

    #[test]
    fn survival_inverts_quantile() {
        let x = point();
        let models = [
            ConditionalModel::pareto(TailIndexMap::Constant(0.5)),
            ConditionalModel::frechet(TailIndexMap::Constant(0.3)),
            ConditionalModel::burr(TailIndexMap::Constant(0.5), RhoMap::Constant(-2.0)),
        ];
        for m in &models {
            for &a in &[1e-6, 1e-3, 0.2, 0.7] {
                let q = m.quantile(a, &x).unwrap();
                assert!(
                    close(m.survival(q, &x).unwrap(), a, 1e-9),
                    "{:?} a = {a}",
                    m.family
                );
            }
        }
    }

    #[test]
    fn pareto_sample_maps_half_to_two() {
        let x = point();
        let m = ConditionalModel::pareto(TailIndexMap::Constant(1.0));
        assert_eq!(m.quantile(0.5, &x).unwrap(), 2.0);
        let a = m.sample(&x, 10, 3).unwrap();
        let b = m.sample(&x, 10, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&v| v >= 1.0));
    }

    #[test]
    fn energy_map_endpoints() {
        let lo = Curve::with_id("lo", vec![1.0, 0.0, 0.0]).unwrap();
        let mid = Curve::with_id("mid", vec![1.0, 1.0, 1.0]).unwrap();
        let hi = Curve::with_id("hi", vec![1.0, 2.0, 0.0]).unwrap();
        let map = TailIndexMap::Energy(
            EnergyMap::from_curves(&[lo.clone(), mid.clone(), hi.clone()]).unwrap(),
        );
        assert!(close(gamma_map_eval(&map, &lo).unwrap(), 0.2, 1e-15));
        assert!(close(gamma_map_eval(&map, &hi).unwrap(), 0.5, 1e-15));
        // energies 1, 3, 5: midpoint
        assert!(close(gamma_map_eval(&map, &mid).unwrap(), 0.35, 1e-15));
        assert!(matches!(
            EnergyMap::from_curves(&[lo.clone(), lo]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn sigma_examples() {
        let c = Curve::with_id("c", vec![0.0; 3]).unwrap();
        let ds = Dataset::new(vec![c.clone()], vec![vec![1.0]]).unwrap();
        let map = TailIndexMap::Constant(0.5);
        let sigma = sigma_scale(&ds, &[(-1.0f64).exp()], &map).unwrap();
        assert!(close(sigma, 1.0 / std::f64::consts::PI.sqrt(), 1e-13));

        // ratios log(1/y) / Γ(1) = 2 and 3
        let ds2 = Dataset::new(vec![c.clone(), c.clone()], vec![vec![1.0], vec![1.0]]).unwrap();
        let map0 = TailIndexMap::Constant(1e-300);
        let s = sigma_scale(&ds2, &[(-2.0f64).exp(), (-3.0f64).exp()], &map0).unwrap();
        assert!(close(s, 2.0, 1e-12));

        assert!(matches!(
            sigma_scale(&ds2, &[1.0, 2.0], &map),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn perturbed_quantile_is_affine_frechet() {
        let x = point();
        let mut centers = BTreeMap::new();
        centers.insert("x".to_string(), 2.0);
        let base = ConditionalModel::frechet(TailIndexMap::Constant(0.3));
        let m = base.clone().with_perturbation(Perturbation {
            sigma: 0.5,
            centers,
        });
        let g = gamma_function(0.7).unwrap();
        for &a in &[1e-4, 0.01, 0.5] {
            let expected = 2.0 + 0.5 * (base.quantile(a, &x).unwrap() - g);
            assert!(close(m.quantile(a, &x).unwrap(), expected, 1e-14));
            let q = m.quantile(a, &x).unwrap();
            assert!(close(m.survival(q, &x).unwrap(), a, 1e-9));
        }
        let missing = Curve::with_id("other", vec![0.0; 3]).unwrap();
        assert!(matches!(m.quantile(0.1, &missing), Err(Error::Config(_))));
    }
}
