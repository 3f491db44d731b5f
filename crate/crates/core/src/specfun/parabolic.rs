//! Parabolic cylinder functions D_nu(z) for real order and argument.
//!
//! Internally everything is carried in the scaled form
//! Ds_nu(z) = e^{z^2/4} D_nu(z), which stays finite where D_nu under- or
//! overflows.

use std::f64::consts::{LN_2, PI, SQRT_2};

use super::gamma::{rgamma, rgamma_deriv};
use super::kummer::{kummer_m, kummer_m_da, HypergeomResult};
use super::tricomi::{tricomi_u, tricomi_u_da};
use crate::error::Result;

const EPS: f64 = f64::EPSILON;

/// Ds_nu(z) = e^{z^2/4} D_nu(z).
///
/// For z > 0 the two Kummer terms cancel, so that side goes through
/// Ds = 2^{nu/2} U(-nu/2, 1/2, z^2/2).
pub fn parabolic_d_scaled(nu: f64, z: f64) -> Result<HypergeomResult> {
    let w = 0.5 * z * z;
    let p = (0.5 * nu * LN_2).exp();
    if z > 0.0 {
        let u = tricomi_u(-0.5 * nu, 0.5, w)?;
        return Ok(u.scaled(p));
    }
    let c = PI.sqrt() * p;
    let r1 = rgamma(0.5 * (1.0 - nu));
    let r2 = rgamma(-0.5 * nu);
    let mut v = 0.0;
    let mut err = 0.0;
    let mut mag = 0.0;
    let mut method = None;
    if r1 != 0.0 {
        let m1 = kummer_m(-0.5 * nu, 0.5, w)?;
        v += r1 * m1.value;
        err += (r1 * m1.abs_err_estimate).abs();
        mag += (r1 * m1.value).abs();
        method = Some(m1.method);
    }
    if r2 != 0.0 && z != 0.0 {
        let m2 = kummer_m(0.5 * (1.0 - nu), 1.5, w)?;
        let t = SQRT_2 * z * r2;
        v -= t * m2.value;
        err += (t * m2.abs_err_estimate).abs();
        mag += (t * m2.value).abs();
        method = method.or(Some(m2.method));
    }
    let method = method.unwrap_or(super::Method::DirectSeries);
    let mut r = HypergeomResult::new(c * v, c * (err + 8.0 * EPS * mag), method);
    r.cancellation = v.abs() < 1e-8 * mag;
    Ok(r)
}

/// d/dnu of the scaled function Ds_nu(z).
pub fn parabolic_d_scaled_dnu(nu: f64, z: f64) -> Result<HypergeomResult> {
    let w = 0.5 * z * z;
    let p = (0.5 * nu * LN_2).exp();
    if z > 0.0 {
        let u = tricomi_u(-0.5 * nu, 0.5, w)?;
        let ua = tricomi_u_da(-0.5 * nu, 0.5, w)?;
        let v = 0.5 * LN_2 * u.value - 0.5 * ua.value;
        let err = 0.5 * LN_2 * u.abs_err_estimate + 0.5 * ua.abs_err_estimate + 4.0 * EPS * v.abs();
        return Ok(HypergeomResult::new(p * v, p * err, ua.method));
    }
    let c = PI.sqrt() * p;
    let (x1, x2) = (0.5 * (1.0 - nu), -0.5 * nu);
    let (r1, r1d) = (rgamma(x1), rgamma_deriv(x1));
    let (r2, r2d) = (rgamma(x2), rgamma_deriv(x2));
    let m1 = kummer_m(x2, 0.5, w)?;
    let m1a = kummer_m_da(x2, 0.5, w)?;
    let mut v = r1 * m1.value;
    let mut dv = -0.5 * (r1d * m1.value + r1 * m1a.value);
    let mut err = (r1 * m1.abs_err_estimate).abs()
        + 0.5 * ((r1d * m1.abs_err_estimate).abs() + (r1 * m1a.abs_err_estimate).abs());
    let mut mag = (r1 * m1.value).abs() + 0.5 * ((r1d * m1.value).abs() + (r1 * m1a.value).abs());
    if z != 0.0 {
        let m2 = kummer_m(x1, 1.5, w)?;
        let m2a = kummer_m_da(x1, 1.5, w)?;
        let s = SQRT_2 * z;
        v -= s * r2 * m2.value;
        dv += 0.5 * s * (r2d * m2.value + r2 * m2a.value);
        err += (s * r2 * m2.abs_err_estimate).abs()
            + 0.5 * ((s * r2d * m2.abs_err_estimate).abs() + (s * r2 * m2a.abs_err_estimate).abs());
        mag += (s * r2 * m2.value).abs() + 0.5 * ((s * r2d * m2.value).abs() + (s * r2 * m2a.value).abs());
    }
    let total = 0.5 * LN_2 * v + dv;
    Ok(HypergeomResult::new(c * total, c * (err + 16.0 * EPS * mag), m1a.method))
}

/// Parabolic cylinder function D_nu(z).
pub fn parabolic_d(nu: f64, z: f64) -> Result<HypergeomResult> {
    Ok(parabolic_d_scaled(nu, z)?.scaled((-0.25 * z * z).exp()))
}

/// dD_nu(z)/dnu.
pub fn parabolic_d_dnu(nu: f64, z: f64) -> Result<HypergeomResult> {
    Ok(parabolic_d_scaled_dnu(nu, z)?.scaled((-0.25 * z * z).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hermite(n: usize, x: f64) -> f64 {
        let (mut h0, mut h1) = (1.0, 2.0 * x);
        if n == 0 {
            return h0;
        }
        for k in 1..n {
            let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
            h0 = h1;
            h1 = h2;
        }
        h1
    }

    #[test]
    fn integer_orders_are_hermite_functions() {
        for n in 0..6 {
            for i in 0..13 {
                let z = -3.0 + 0.5 * i as f64;
                let want = 2f64.powf(-0.5 * n as f64) * (-0.25 * z * z).exp() * hermite(n, z / SQRT_2);
                let got = parabolic_d(n as f64, z).unwrap().value;
                assert!((got - want).abs() < 1e-13 * want.abs().max(1.0), "n={n} z={z} {got} {want}");
            }
        }
    }

    #[test]
    fn both_sides_agree_at_the_origin() {
        for &nu in &[-2.3, -0.5, 0.7, 3.4] {
            let l = parabolic_d(nu, -1e-9).unwrap().value;
            let r = parabolic_d(nu, 1e-9).unwrap().value;
            assert!((l - r).abs() < 1e-8 * l.abs(), "nu={nu}");
        }
    }

    #[test]
    fn derivative_in_order_matches_differences() {
        for &(nu, z) in &[(0.5, 1.0), (0.5, -1.0), (2.3, 0.0), (-1.7, 2.5), (4.2, -3.0), (6.6, 4.0)] {
            let h = 1e-5;
            let fd = (parabolic_d(nu + h, z).unwrap().value - parabolic_d(nu - h, z).unwrap().value) / (2.0 * h);
            let d = parabolic_d_dnu(nu, z).unwrap().value;
            assert!((d - fd).abs() < 1e-7 * fd.abs().max(1e-3), "nu={nu} z={z} {d} {fd}");
        }
    }

    #[test]
    fn z_derivative_identity() {
        // d/dz D_nu = (z/2) D_nu - D_{nu+1}
        for &(nu, z) in &[(0.3, 1.2), (-1.4, -0.8), (2.5, 2.0)] {
            let h = 1e-5;
            let fd = (parabolic_d(nu, z + h).unwrap().value - parabolic_d(nu, z - h).unwrap().value) / (2.0 * h);
            let id = 0.5 * z * parabolic_d(nu, z).unwrap().value - parabolic_d(nu + 1.0, z).unwrap().value;
            assert!((fd - id).abs() < 1e-8, "nu={nu} z={z}");
        }
    }
}
