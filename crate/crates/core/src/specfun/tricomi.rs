//! Tricomi's confluent hypergeometric function U(a, b, z) for z > 0.

use std::f64::consts::PI;

use super::gamma::{is_nonpositive_integer, lgamma, poch, rgamma, rgamma_deriv, sinpi};
use super::kummer::{kummer_m, kummer_m_da, HypergeomResult, Method};
use crate::error::{domain, Result};
use crate::quad::{exp_sinh, gauss_kronrod_inf};

const EPS: f64 = f64::EPSILON;
const RICHARDSON_EPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

fn is_integer(x: f64) -> bool {
    x.fract() == 0.0
}

/// U(a, b, z) for real a, b and z > 0.
pub fn tricomi_u(a: f64, b: f64, z: f64) -> Result<HypergeomResult> {
    if !(a.is_finite() && b.is_finite() && z.is_finite()) {
        return domain("non-finite argument");
    }
    if !(z > 0.0) {
        return domain(format!("Tricomi U needs z > 0, got {z}"));
    }
    if a == 0.0 {
        return Ok(HypergeomResult::new(1.0, 0.0, Method::DirectSeries));
    }
    if is_nonpositive_integer(a) && a > -1e4 && !is_nonpositive_integer(b) {
        // terminating case U(-n, b, z) = (-1)^n (b)_n M(-n, b, z)
        let n = (-a) as usize;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let m = kummer_m(a, b, z)?;
        return Ok(m.scaled(sign * poch(b, n)));
    }
    if let Some(r) = asymptotic(a, b, z) {
        return Ok(r);
    }
    if is_integer(b) {
        let r = richardson(a, b, z);
        let i = integral_route(a, b, z);
        return match (r, i) {
            (Ok(r), Ok(i)) => Ok(if i.abs_err_estimate < r.abs_err_estimate { i } else { r }),
            (Ok(r), Err(_)) => Ok(r),
            (Err(_), Ok(i)) => Ok(i),
            (Err(e), Err(_)) => Err(e),
        };
    }
    let conn = connection(a, b, z);
    if let Ok(c) = conn {
        if c.abs_err_estimate <= 1e-13 * c.value.abs() {
            return Ok(c);
        }
    }
    let int = integral_route(a, b, z);
    match (conn, int) {
        (Ok(c), Ok(i)) => Ok(if i.abs_err_estimate < c.abs_err_estimate { i } else { c }),
        (Ok(c), Err(_)) => Ok(c),
        (Err(_), Ok(i)) => Ok(i),
        (Err(e), Err(_)) => Err(e),
    }
}

/// Connection formula in terms of two Kummer functions (non-integer b):
/// U = pi/sin(pi b) [M(a,b,z)/(Gamma(b) Gamma(a-b+1))
///                   - z^{1-b} M(a-b+1,2-b,z)/(Gamma(2-b) Gamma(a))].
pub fn tricomi_u_connection(a: f64, b: f64, z: f64) -> Result<HypergeomResult> {
    if is_integer(b) {
        return domain("connection formula needs non-integer b");
    }
    connection(a, b, z)
}

fn connection(a: f64, b: f64, z: f64) -> Result<HypergeomResult> {
    let c = PI / sinpi(b);
    let g1 = rgamma(b) * rgamma(a - b + 1.0);
    let g2 = rgamma(2.0 - b) * rgamma(a) * z.powf(1.0 - b);
    let mut t1 = 0.0;
    let mut e1 = 0.0;
    if g1 != 0.0 {
        let m1 = kummer_m(a, b, z)?;
        t1 = g1 * m1.value;
        e1 = (g1 * m1.abs_err_estimate).abs();
    }
    let mut t2 = 0.0;
    let mut e2 = 0.0;
    if g2 != 0.0 {
        let m2 = kummer_m(a - b + 1.0, 2.0 - b, z)?;
        t2 = g2 * m2.value;
        e2 = (g2 * m2.abs_err_estimate).abs();
    }
    let v = c * (t1 - t2);
    let err = c.abs() * (e1 + e2 + 16.0 * EPS * (t1.abs() + t2.abs()));
    let mut r = HypergeomResult::new(v, err, Method::DirectSeries);
    r.cancellation = v.abs() < 1e-8 * c.abs() * t1.abs().max(t2.abs());
    Ok(r)
}

fn richardson(a: f64, b: f64, z: f64) -> Result<HypergeomResult> {
    // symmetric averages are even in eps: extrapolate in eps^2
    let mut v = [0.0; 3];
    let mut err = 0.0f64;
    for (i, &e) in RICHARDSON_EPS.iter().enumerate() {
        let up = connection(a, b + e, z)?;
        let dn = connection(a, b - e, z)?;
        v[i] = 0.5 * (up.value + dn.value);
        err = err.max(0.5 * (up.abs_err_estimate + dn.abs_err_estimate));
    }
    let r1 = (4.0 * v[1] - v[0]) / 3.0;
    let r2 = (4.0 * v[2] - v[1]) / 3.0;
    let r = (16.0 * r2 - r1) / 15.0;
    // propagated rounding is amplified by the extrapolation weights
    let total = (r - r2).abs() + 8.0 * err;
    Ok(HypergeomResult::new(r, total, Method::Extrapolated))
}

fn asymptotic(a: f64, b: f64, z: f64) -> Option<HypergeomResult> {
    if z < 25.0 {
        return None;
    }
    // z^{-a} sum (a)_s (a-b+1)_s / s! (-z)^{-s}
    let mut t = 1.0f64;
    let mut s = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        let next = t * (a + kf - 1.0) * (a - b + kf) / (kf * -z);
        if next == 0.0 {
            break;
        }
        if next.abs() > t.abs() {
            return None;
        }
        t = next;
        s += t;
        if t.abs() < 0.5 * EPS * s.abs() {
            let v = (-a * z.ln()).exp() * s;
            let err = (8.0 + 2.0 * (a * z.ln()).abs() + k as f64) * EPS * v.abs();
            return Some(HypergeomResult::new(v, err, Method::Asymptotic));
        }
    }
    None
}

/// U(a, b, z) = 1/Gamma(a) int_0^inf e^{-zt} t^{a-1} (1+t)^{b-a-1} dt, a > 0.
pub fn tricomi_u_integral(a: f64, b: f64, z: f64) -> Result<HypergeomResult> {
    if !(a > 0.0 && z > 0.0) {
        return domain("integral representation needs a > 0 and z > 0");
    }
    // t = s/z, integrand in log form scaled by Gamma(a)
    let lg = lgamma(a);
    let lz = z.ln();
    let f = |s: f64| -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let l = (a - 1.0) * s.ln() - s + (b - a - 1.0) * (s / z).ln_1p() - lg;
        l.exp()
    };
    let r = match exp_sinh(|s, _| f(s), 0.0, 1e-14) {
        Ok(r) => r,
        Err(_) => gauss_kronrod_inf(f, 0.0, 0.0, 1e-13)?,
    };
    let scale = (-a * lz).exp();
    let err = r.abs_err + (8.0 + (a * lz).abs() + lg.abs()) * EPS * r.value.abs();
    Ok(HypergeomResult::new(r.value * scale, err * scale, Method::IntegralRep))
}

fn integral_route(a: f64, b: f64, z: f64) -> Result<HypergeomResult> {
    if a >= 1.0 {
        return tricomi_u_integral(a, b, z);
    }
    // raise a into [1, 2) so the integrand stays bounded at 0, then recur
    // downward: U(c-1) = -(b - 2c - z) U(c) - c (c - b + 1) U(c+1)
    let n = (1.0 - a).floor() as usize + 1;
    let a0 = a + n as f64;
    let u0 = tricomi_u_integral(a0, b, z)?;
    let u1 = tricomi_u_integral(a0 + 1.0, b, z)?;
    let (mut uc, mut ucp) = (u0.value, u1.value);
    let mut rel = (u0.abs_err_estimate / u0.value.abs()).max(u1.abs_err_estimate / u1.value.abs());
    let mut c = a0;
    for _ in 0..n {
        let um = -(b - 2.0 * c - z) * uc - c * (c - b + 1.0) * ucp;
        let mag = ((b - 2.0 * c - z) * uc).abs() + (c * (c - b + 1.0) * ucp).abs();
        if um != 0.0 {
            rel += EPS * mag / um.abs();
        }
        ucp = uc;
        uc = um;
        c -= 1.0;
    }
    // the per-step bound ignores correlated growth; widen it with the length
    Ok(HypergeomResult::new(uc, (4.0 + n as f64) * rel * uc.abs(), Method::RecurrenceShift))
}

// (U, dU/da) from the integral representation, a >= 1
fn integral_pair(a: f64, b: f64, z: f64) -> Result<(f64, f64, f64)> {
    let lg = lgamma(a);
    let psi = super::gamma::digamma(a);
    let lz = z.ln();
    let base = |s: f64| -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        ((a - 1.0) * s.ln() - s + (b - a - 1.0) * (s / z).ln_1p() - lg).exp()
    };
    let u = exp_sinh(|s, _| base(s), 0.0, 1e-14).or_else(|_| gauss_kronrod_inf(base, 0.0, 0.0, 1e-13))?;
    let g = |s: f64| -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        base(s) * (s.ln() - lz - (s / z).ln_1p() - psi)
    };
    let du = exp_sinh(|s, _| g(s), 0.0, 1e-13).or_else(|_| gauss_kronrod_inf(g, 0.0, 0.0, 1e-12))?;
    let scale = (-a * lz).exp();
    let rel = (u.abs_err / u.value.abs()).max(du.abs_err / du.value.abs().max(1e-300)) + (8.0 + (a * lz).abs() + lg.abs()) * EPS;
    Ok((u.value * scale, du.value * scale, rel))
}

fn integral_route_da(a: f64, b: f64, z: f64) -> Result<HypergeomResult> {
    if a >= 1.0 {
        let (_, du, rel) = integral_pair(a, b, z)?;
        return Ok(HypergeomResult::new(du, 4.0 * rel * du.abs(), Method::IntegralRep));
    }
    let n = (1.0 - a).floor() as usize + 1;
    let a0 = a + n as f64;
    let (u0, d0, r0) = integral_pair(a0, b, z)?;
    let (u1, d1, r1) = integral_pair(a0 + 1.0, b, z)?;
    let (mut uc, mut ucp, mut dc, mut dcp) = (u0, u1, d0, d1);
    let mut c = a0;
    let mut mag = 0.0f64;
    for _ in 0..n {
        let p = b - 2.0 * c - z;
        let q = c * (c - b + 1.0);
        let um = -p * uc - q * ucp;
        // differentiate the recurrence coefficients along with the values
        let dm = 2.0 * uc - p * dc - (2.0 * c - b + 1.0) * ucp - q * dcp;
        mag = mag.max((p * dc).abs() + (q * dcp).abs() + (2.0 * uc).abs() + ((2.0 * c - b + 1.0) * ucp).abs());
        ucp = uc;
        uc = um;
        dcp = dc;
        dc = dm;
        c -= 1.0;
    }
    let err = (4.0 + n as f64) * (r0.max(r1) * dc.abs() + EPS * mag);
    Ok(HypergeomResult::new(dc, err, Method::RecurrenceShift))
}

/// dU(a, b, z)/da.
pub fn tricomi_u_da(a: f64, b: f64, z: f64) -> Result<HypergeomResult> {
    if !(a.is_finite() && b.is_finite() && z > 0.0) {
        return domain(format!("Tricomi U needs finite a, b and z > 0, got z = {z}"));
    }
    if z >= 25.0 {
        if let Some(r) = asymptotic_da(a, b, z) {
            return Ok(r);
        }
    }
    if !is_integer(b) {
        if let Ok(r) = connection_da(a, b, z) {
            if r.abs_err_estimate <= 1e-10 * r.value.abs() {
                return Ok(r);
            }
        }
    }
    match integral_route_da(a, b, z) {
        Ok(r) if r.abs_err_estimate <= 1e-8 * r.value.abs() => Ok(r),
        _ if is_integer(b) => richardson_da(a, b, z).or_else(|_| finite_difference_da(a, b, z)),
        _ => finite_difference_da(a, b, z),
    }
}

fn connection_da(a: f64, b: f64, z: f64) -> Result<HypergeomResult> {
    let c = PI / sinpi(b);
    let a1 = a - b + 1.0;
    let m1 = kummer_m(a, b, z)?;
    let m1a = kummer_m_da(a, b, z)?;
    let m2 = kummer_m(a1, 2.0 - b, z)?;
    let m2a = kummer_m_da(a1, 2.0 - b, z)?;
    let zp = z.powf(1.0 - b);
    let (g1, g1d) = (rgamma(a1), rgamma_deriv(a1));
    let (g2, g2d) = (rgamma(a), rgamma_deriv(a));
    let t1 = rgamma(b) * (g1d * m1.value + g1 * m1a.value);
    let t2 = rgamma(2.0 - b) * zp * (g2d * m2.value + g2 * m2a.value);
    let v = c * (t1 - t2);
    let err = c.abs()
        * (64.0 * EPS * (t1.abs() + t2.abs())
            + (rgamma(b) * g1d * m1.abs_err_estimate).abs()
            + (rgamma(b) * g1 * m1a.abs_err_estimate).abs()
            + (rgamma(2.0 - b) * zp * g2d * m2.abs_err_estimate).abs()
            + (rgamma(2.0 - b) * zp * g2 * m2a.abs_err_estimate).abs());
    Ok(HypergeomResult::new(v, err, Method::DirectSeries))
}

fn richardson_da(a: f64, b: f64, z: f64) -> Result<HypergeomResult> {
    let mut v = [0.0; 3];
    let mut err = 0.0f64;
    for (i, &e) in RICHARDSON_EPS.iter().enumerate() {
        let up = connection_da(a, b + e, z)?;
        let dn = connection_da(a, b - e, z)?;
        v[i] = 0.5 * (up.value + dn.value);
        err = err.max(0.5 * (up.abs_err_estimate + dn.abs_err_estimate));
    }
    let r1 = (4.0 * v[1] - v[0]) / 3.0;
    let r2 = (4.0 * v[2] - v[1]) / 3.0;
    let r = (16.0 * r2 - r1) / 15.0;
    Ok(HypergeomResult::new(r, (r - r2).abs() + 8.0 * err, Method::Extrapolated))
}

fn asymptotic_da(a: f64, b: f64, z: f64) -> Option<HypergeomResult> {
    // d/da of z^{-a} sum_s c_s(a) (-z)^{-s}, differentiating each c_s
    let mut t = 1.0f64;
    let mut dt = 0.0f64;
    let (mut s, mut ds) = (1.0, 0.0);
    for k in 1..200 {
        let kf = k as f64;
        let (p, q) = (a + kf - 1.0, a - b + kf);
        let f = p * q / (kf * -z);
        let df = (p + q) / (kf * -z);
        let next = t * f;
        if next.abs() > t.abs() {
            return None;
        }
        dt = dt * f + t * df;
        t = next;
        s += t;
        ds += dt;
        if t.abs() < 0.5 * EPS * s.abs() && dt.abs() < 0.5 * EPS * ds.abs().max(s.abs()) {
            let za = (-a * z.ln()).exp();
            let v = za * (ds - z.ln() * s);
            return Some(HypergeomResult::new(v, 16.0 * EPS * za * (ds.abs() + z.ln() * s.abs()), Method::Asymptotic));
        }
    }
    None
}

fn finite_difference_da(a: f64, b: f64, z: f64) -> Result<HypergeomResult> {
    // step below the oscillation scale in a, which is about 1/sqrt(|a| z)
    let h = 2e-3 / (1.0 + (a.abs() * z.max(1.0)).sqrt());
    let d = |h: f64| -> Result<(f64, f64)> {
        let p = tricomi_u(a + h, b, z)?;
        let m = tricomi_u(a - h, b, z)?;
        Ok(((p.value - m.value) / (2.0 * h), (p.abs_err_estimate + m.abs_err_estimate) / (2.0 * h)))
    };
    let (d1, e1) = d(h)?;
    let (d2, e2) = d(0.5 * h)?;
    let v = (4.0 * d2 - d1) / 3.0;
    let err = (v - d2).abs() + 2.0 * (e1 + e2);
    Ok(HypergeomResult::new(v, err, Method::Extrapolated))
}
