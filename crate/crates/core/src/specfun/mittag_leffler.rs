//! One-parameter Mittag-Leffler function E_alpha(z) on the negative axis.

use super::gamma::rgamma;
use crate::error::{domain, Result};
use crate::quad::exp_sinh;

/// E_alpha(z) for 0 < alpha <= 1 and z <= 0.
///
/// Taylor series for |z| <= 1. Beyond that the series cancels badly, and
/// the Laplace representation
/// E_alpha(-t^alpha) = sin(pi alpha)/(pi alpha) int_0^inf exp(-t u^{1/alpha}) / (u^2 + 2u cos(pi alpha) + 1) du
/// is integrated instead.
pub fn mittag_leffler(alpha: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("Mittag-Leffler order must lie in (0, 1], got {alpha}"));
    }
    if !(z <= 0.0) {
        return domain(format!("Mittag-Leffler argument must be <= 0, got {z}"));
    }
    if alpha == 1.0 {
        return Ok(z.exp());
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z >= -1.0 {
        let mut sum = 0.0;
        let mut zn = 1.0;
        for n in 0..200 {
            let t = zn * rgamma(alpha * n as f64 + 1.0);
            sum += t;
            if n > 2 && t.abs() < 1e-17 * sum.abs() {
                break;
            }
            zn *= z;
        }
        return Ok(sum);
    }
    let x = -z;
    let t = x.powf(1.0 / alpha);
    let (s, c) = (std::f64::consts::PI * alpha).sin_cos();
    let r = exp_sinh(
        |u, _| (-t * u.powf(1.0 / alpha)).exp() / (u * u + 2.0 * u * c + 1.0),
        0.0,
        1e-14,
    );
    let v = match r {
        Ok(q) => q.value,
        Err(crate::Error::Quadrature { value, .. }) => value,
        Err(e) => return Err(e),
    };
    Ok(s / (std::f64::consts::PI * alpha) * v)
}
