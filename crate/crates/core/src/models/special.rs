//! Gamma function via the Lanczos approximation (g = 7, nine terms).

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(z)` for `z >= 0.5`.
fn ln_gamma_lanczos(z: f64) -> f64 {
    let x = z - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

/// `Γ(z)` for real `z > 0`.
pub fn gamma_function(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!(
            "gamma function requires a finite z > 0, got {z}"
        )));
    }
    if z < 0.5 {
        // reflection: Γ(z) Γ(1 - z) = π / sin(π z)
        let other = ln_gamma_lanczos(1.0 - z).exp();
        return Ok(PI / ((PI * z).sin() * other));
    }
    Ok(ln_gamma_lanczos(z).exp())
}

/// `ln Γ(z)` for real `z > 0`.
pub fn ln_gamma(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!(
            "log-gamma requires a finite z > 0, got {z}"
        )));
    }
    if z < 0.5 {
        return Ok((PI / (PI * z).sin()).ln() - ln_gamma_lanczos(1.0 - z));
    }
    Ok(ln_gamma_lanczos(z))
}
