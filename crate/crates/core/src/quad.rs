//! Tanh-sinh (double-exponential) quadrature on `(0, 1)`.
//!
//! Nodes never touch the endpoints, so integrable endpoint singularities
//! such as `log(s)^2` at `s = 0` are handled without special casing.

use crate::error::{Error, Result};

use std::f64::consts::{FRAC_PI_2, PI};

const MAX_LEVELS: usize = 12;
const T_MAX: f64 = 4.0;

/// Trapezoid sum in the transformed variable with step `step`, optionally
/// restricted to odd multiples of the step (the nodes added when halving).
fn trapezoid<F: Fn(f64) -> f64>(f: &F, step: f64, odd_only: bool) -> f64 {
    let n = (T_MAX / step).ceil() as i64;
    let (start, stride) = if odd_only {
        (if n % 2 == 0 { -n + 1 } else { -n }, 2)
    } else {
        (-n, 1)
    };
    let mut sum = 0.0;
    let mut j = start;
    while j <= n {
        let t = j as f64 * step;
        let u = FRAC_PI_2 * t.sinh();
        let cosh_u = u.cosh();
        // s = (1 + tanh u) / 2 written as a logistic to keep small s accurate
        let s = 1.0 / (1.0 + (-2.0 * u).exp());
        let weight = 0.25 * PI * t.cosh() / (cosh_u * cosh_u);
        if s > 0.0 && s < 1.0 && weight > 0.0 {
            sum += weight * f(s);
        }
        j += stride;
    }
    sum
}

/// Integral of `f` over `(0, 1)` to absolute tolerance `tol`.
pub fn integrate_unit<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<f64> {
    let mut step = 0.5;
    let mut sum = trapezoid(&f, step, false);
    let mut estimate = sum * step;
    for _ in 0..MAX_LEVELS {
        step *= 0.5;
        sum += trapezoid(&f, step, true);
        let next = sum * step;
        if !next.is_finite() {
            return Err(Error::Config(
                "integrand is not integrable on (0, 1)".into(),
            ));
        }
        if (next - estimate).abs() <= tol {
            return Ok(next);
        }
        estimate = next;
    }
    Err(Error::Config(format!(
        "quadrature did not converge to {tol} on (0, 1); integral may diverge"
    )))
}
