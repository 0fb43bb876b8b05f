use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functional::{Curve, Dataset};
use crate::models::{sigma_scale_for, ConditionalModel, EnergyMap, Perturbation, TailIndexMap};

const MAX_REDRAWS: usize = 100;

/// `y_i = 0.05 + 0.9 (i - 1) / (n - 1)`: equally spaced in `[0.05, 0.95]`.
pub fn default_y_values(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5];
    }
    (0..n)
        .map(|i| 0.05 + 0.9 * i as f64 / (n - 1) as f64)
        .collect()
}

fn draw_curve<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let scale = rng.random_range(0.7..1.3);
    let n_dips = rng.random_range(3..=6);
    let dips: Vec<(f64, f64, f64)> = (0..n_dips)
        .map(|_| {
            (
                rng.random_range(0.05..0.95),
                rng.random_range(0.01..0.08),
                rng.random_range(0.02..0.3),
            )
        })
        .collect();
    (0..len)
        .map(|l| {
            let s = l as f64 / (len - 1) as f64;
            let baseline = 0.55 + 0.25 * s - 0.15 * s * s;
            let absorbed: f64 = dips
                .iter()
                .map(|&(center, width, depth)| {
                    depth * baseline * (-(s - center).powi(2) / (2.0 * width * width)).exp()
                })
                .sum();
            scale * (baseline - absorbed)
        })
        .collect()
}

/// Spectrum-like curves: a smooth baseline minus 3 to 6 Gaussian absorption
/// dips, times a curve-level reflectance factor. Energies are pairwise
/// distinct (a colliding curve is redrawn).
pub fn generate_curves(len: usize, n_curves: usize, seed: u64) -> Result<Vec<Curve>> {
    if len < 3 {
        return Err(Error::Structural(format!(
            "curve length must be >= 3, got {len}"
        )));
    }
    if n_curves < 2 {
        return Err(Error::Structural(format!(
            "need at least 2 curves, got {n_curves}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let width = n_curves.to_string().len().max(2);
    let mut curves: Vec<Curve> = Vec::with_capacity(n_curves);
    for i in 0..n_curves {
        let mut accepted = None;
        for _ in 0..MAX_REDRAWS {
            let values = draw_curve(&mut rng, len);
            let energy: f64 = values.iter().map(|v| v * v).sum();
            let distinct = curves
                .iter()
                .all(|c| (c.energy() - energy).abs() > 1e-9 * energy.abs().max(1e-300));
            if distinct {
                accepted = Some(values);
                break;
            }
        }
        let values = accepted.ok_or_else(|| {
            Error::Generation(format!(
                "could not draw curve {} with a distinct energy after {MAX_REDRAWS} attempts",
                i + 1
            ))
        })?;
        curves.push(Curve::with_id(format!("c{:0width$}", i + 1), values)?);
    }
    Ok(curves)
}

/// Fréchet noise with energy-driven tail index, shifted and scaled so that
/// responses at `x_i` are centered on `log(1/y_i)` and stay positive.
pub fn perturbed_frechet_model(curves: &[Curve], y_values: &[f64]) -> Result<ConditionalModel> {
    let map = TailIndexMap::Energy(EnergyMap::from_curves(curves)?);
    let sigma = sigma_scale_for(curves, y_values, &map)?;
    let mut centers = BTreeMap::new();
    for (curve, &y) in curves.iter().zip(y_values) {
        let id = curve
            .id()
            .ok_or_else(|| Error::Config("study curves need identifiers".into()))?;
        if centers.insert(id.to_string(), (1.0 / y).ln()).is_some() {
            return Err(Error::Config(format!("duplicate curve identifier {id}")));
        }
    }
    Ok(ConditionalModel::frechet(map).with_perturbation(Perturbation { sigma, centers }))
}

/// `n_responses` draws at every curve; curve `i` uses seed `seed + i`.
pub fn generate_responses(
    curves: &[Curve],
    y_values: &[f64],
    n_responses: usize,
    seed: u64,
) -> Result<Dataset> {
    let model = perturbed_frechet_model(curves, y_values)?;
    responses_from_model(&model, curves, n_responses, seed)
}

pub(crate) fn responses_from_model(
    model: &ConditionalModel,
    curves: &[Curve],
    n_responses: usize,
    seed: u64,
) -> Result<Dataset> {
    if n_responses == 0 {
        return Err(Error::Structural(
            "need at least one response per curve".into(),
        ));
    }
    let mut responses = Vec::with_capacity(curves.len());
    for (i, x) in curves.iter().enumerate() {
        let ys = model.sample(x, n_responses, seed.wrapping_add(i as u64))?;
        if let Some(y) = ys.iter().find(|y| !(**y > 0.0)) {
            return Err(Error::Generation(format!(
                "non-positive response {y} at curve {}",
                x.label()
            )));
        }
        responses.push(ys);
    }
    Dataset::new(curves.to_vec(), responses)
}
