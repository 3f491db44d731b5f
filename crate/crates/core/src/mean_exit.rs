//! Mean exit times for intervals, balls and their exteriors, and the
//! splitting probability. All times are in units of L^2/D.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ou_model::{canonicalize, BROWNIAN_KAPPA};
use crate::quad::{gauss_kronrod, gauss_kronrod_best};
use crate::specfun::{dawson, erfcx, gamma};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    Interval1D,
    RadialInterior,
    RadialExterior,
    Exterior1DForced,
}

/// The Brownian exterior problem has no finite mean, which is reported
/// as a value rather than an error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MeanExitTime {
    Finite(f64),
    Infinite,
}

impl MeanExitTime {
    pub fn value(self) -> f64 {
        match self {
            MeanExitTime::Finite(v) => v,
            MeanExitTime::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeanExitRequest {
    pub geometry: Geometry,
    pub kappa: f64,
    pub varphi: f64,
    pub start: f64,
    pub d: u32,
    /// L^2/D; the result is multiplied by it.
    pub timescale: f64,
}

impl MeanExitRequest {
    pub fn evaluate(&self) -> Result<MeanExitTime> {
        let v = match self.geometry {
            Geometry::Interval1D => MeanExitTime::Finite(met_interval(self.kappa, self.varphi, self.start)?),
            Geometry::RadialInterior => MeanExitTime::Finite(met_radial_interior(self.d, self.kappa, self.start)?),
            Geometry::RadialExterior => met_radial_exterior(self.d, self.kappa, self.start)?,
            Geometry::Exterior1DForced => met_exterior_1d_forced(self.kappa, self.varphi, self.start)?,
        };
        Ok(match v {
            MeanExitTime::Finite(t) => MeanExitTime::Finite(t * self.timescale),
            inf => inf,
        })
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return domain(format!("kappa must be finite and >= 0, got {kappa}"));
    }
    Ok(())
}

#[cfg(test)]
fn integrate(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    match crate::quad::tanh_sinh(|x, _| f(x), a, b, 1e-14) {
        Ok(r) => Ok(r.value),
        Err(_) => gauss_kronrod(f, a, b, 1e-300, 1e-13).map(|r| r.value),
    }
}

/// Integral of e^{z^2} erfc(z) over [a, b].
fn int_erfcx(a: f64, b: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    // split at 0 so the Gaussian growth on the negative side is resolved
    if a < 0.0 && b > 0.0 {
        return Ok(int_erfcx(a, 0.0)? + int_erfcx(0.0, b)?);
    }
    gauss_kronrod(erfcx, a, b, 1e-300, 1e-13).map(|r| r.value)
}

/// ln int_a^b e^{v^2} dv for a <= b.
fn log_int_exp_sq(a: f64, b: f64) -> f64 {
    if a >= b {
        return f64::NEG_INFINITY;
    }
    let m = (a * a).max(b * b);
    let w = b - a;
    if w * (1.0 + a.abs().max(b.abs())) < 0.5 {
        let (c, h) = (0.5 * (a + b), 0.5 * w);
        let s: f64 = GL8.iter().map(|&(x, wt)| {
            let v = c + h * x;
            wt * (v * v - m).exp()
        }).sum();
        return m + (h * s).ln();
    }
    m + ((b * b - m).exp() * dawson(b) - (a * a - m).exp() * dawson(a)).ln()
}

const GL8: [(f64, f64); 8] = [
    (-0.9602898564975363, 0.10122853629037626),
    (-0.7966664774136267, 0.22238103445337448),
    (-0.525532409916329, 0.31370664587788727),
    (-0.18343464249564978, 0.362683783378362),
    (0.18343464249564978, 0.362683783378362),
    (0.525532409916329, 0.31370664587788727),
    (0.7966664774136267, 0.22238103445337448),
    (0.9602898564975363, 0.10122853629037626),
];

/// Probability of leaving [-L, L] through +L, for any sign of varphi.
pub fn splitting_probability(kappa: f64, varphi: f64, z0: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if !(-1.0..=1.0).contains(&z0) {
        return domain(format!("start must lie in [-1, 1], got {z0}"));
    }
    if z0 == 1.0 {
        return Ok(1.0);
    }
    if z0 == -1.0 {
        return Ok(0.0);
    }
    if kappa < BROWNIAN_KAPPA {
        // drift eta = 2 kappa varphi in units D/L
        let eta = 2.0 * kappa * varphi;
        if eta == 0.0 {
            return Ok(0.5 * (1.0 + z0));
        }
        return Ok((-eta * (1.0 + z0)).exp_m1() / (-2.0 * eta).exp_m1());
    }
    // the erfi ratio, with erfi(y) = 2/sqrt(pi) e^{y^2} D(y) handled in logs
    let s = kappa.sqrt();
    let (x, q, p) = (s * (z0 - varphi), s * (1.0 - varphi), -s * (1.0 + varphi));
    Ok((log_int_exp_sq(p, x) - log_int_exp_sq(p, q)).exp().clamp(0.0, 1.0))
}

/// Mean exit time from [-L, L] started at z0 = x0/L.
///
/// Evaluated through the Green's function of the backward equation,
/// kappa tau = (1-H) int_p^x e^{-t^2} int_p^t e^{v^2} + H int_x^q e^{-t^2} int_t^q e^{v^2},
/// whose integrand is positive; the erfi and erfcx closed forms cancel
/// badly for kappa (1+varphi)^2 of order 10 and above.
pub fn met_interval(kappa: f64, varphi: f64, z0: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if !(-1.0..=1.0).contains(&z0) {
        return domain(format!("start must lie in [-1, 1], got {z0}"));
    }
    let (varphi, z0) = canonicalize(varphi, z0);
    if z0.abs() == 1.0 {
        return Ok(0.0);
    }
    if kappa < BROWNIAN_KAPPA {
        return Ok(met_free_drift(2.0 * kappa * varphi, z0));
    }
    let s = kappa.sqrt();
    let (p, q, x) = (-s * (1.0 + varphi), s * (1.0 - varphi), s * (z0 - varphi));
    let lpq = log_int_exp_sq(p, q);
    let (l1, l2) = (log_int_exp_sq(x, q) - lpq, log_int_exp_sq(p, x) - lpq);
    let f1 = |t: f64| (l1 + log_int_exp_sq(p, t) - t * t).exp();
    let f2 = |t: f64| (l2 + log_int_exp_sq(t, q) - t * t).exp();
    let i1 = gauss_kronrod(f1, p, x, 1e-300, 1e-13)?.value;
    let i2 = gauss_kronrod(f2, x, q, 1e-300, 1e-13)?.value;
    Ok((i1 + i2) / kappa)
}

/// The erfi closed form, sqrt(pi)/(2 kappa) [H int_p^q e^{z^2} erf z - int_p^x e^{z^2} erf z].
#[cfg(test)]
fn met_interval_erfi_form(kappa: f64, varphi: f64, z0: f64) -> f64 {
    let s = kappa.sqrt();
    let h = splitting_probability(kappa, varphi, z0).unwrap();
    let f = |z: f64| (z * z).exp() * crate::specfun::erf(z);
    let (p, q, x) = (-s * (1.0 + varphi), s * (1.0 - varphi), s * (z0 - varphi));
    PI.sqrt() / (2.0 * kappa) * (h * integrate(f, p, q).unwrap() - integrate(f, p, x).unwrap())
}

/// The erfcx closed form, sqrt(pi)/(2 kappa) [H int_a^c erfcx - int_b^c erfcx].
#[cfg(test)]
fn met_interval_erfcx_form(kappa: f64, varphi: f64, z0: f64) -> f64 {
    let s = kappa.sqrt();
    let h = splitting_probability(kappa, varphi, z0).unwrap();
    let (a, b, c) = (s * (varphi - 1.0), s * (varphi - z0), s * (1.0 + varphi));
    PI.sqrt() / (2.0 * kappa) * (h * int_erfcx(a, c).unwrap() - int_erfcx(b, c).unwrap())
}

/// Mean exit time without trap but with a constant drift eta (units D/L).
fn met_free_drift(eta: f64, z0: f64) -> f64 {
    if eta.abs() < 1e-3 {
        let w = (1.0 - z0) * (1.0 + z0);
        let c0 = w / 2.0;
        let c1 = -z0 * w / 6.0;
        let c2 = -w * w / 24.0;
        let c3 = -z0 * w * (3.0 * z0 * z0 - 7.0) / 360.0;
        let c4 = -w * w * (z0 * z0 - 3.0) / 720.0;
        return c0 + eta * (c1 + eta * (c2 + eta * (c3 + eta * c4)));
    }
    let num = if eta < 300.0 {
        (-2.0 * eta).exp() * (eta * (1.0 - z0)).exp_m1()
    } else {
        (-eta * (1.0 + z0)).exp() - (-2.0 * eta).exp()
    };
    let frac = 2.0 * num / -(-2.0 * eta).exp_m1();
    (1.0 - z0 - frac) / eta
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Auto,
    Centered,
    WeakForce,
    Marginal,
    StrongForce,
}

/// lim c(zbar) = exp(-sqrt(pi) [int_0^1 erfcx + int_1^inf (erfcx - 1/(sqrt(pi) z))]).
pub fn marginal_constant() -> f64 {
    let a = gauss_kronrod_best(erfcx, 0.0, 1.0, 1e-300, 1e-14).value;
    let tail = |z: f64| erfcx(z) - 1.0 / (PI.sqrt() * z);
    let mut b = 0.0;
    let mut lo = 1.0;
    // geometric panels out to 1e6; beyond that the integrand is -1/(2 sqrt(pi) z^3)
    while lo < 1e6 {
        b += gauss_kronrod_best(tail, lo, 10.0 * lo, 1e-300, 1e-14).value;
        lo *= 10.0;
    }
    b -= 1.0 / (4.0 * PI.sqrt() * lo * lo);
    (-PI.sqrt() * (a + b)).exp()
}

/// Large-kappa approximations of the interval mean exit time.
pub fn met_interval_asymptotic(kappa: f64, varphi: f64, z0: f64, regime: Regime) -> Result<f64> {
    check_kappa(kappa)?;
    if kappa == 0.0 {
        return domain("large-kappa asymptotics need kappa > 0");
    }
    let (varphi, z0) = canonicalize(varphi, z0);
    let regime = match regime {
        Regime::Auto if varphi == 0.0 => Regime::Centered,
        Regime::Auto if varphi < 1.0 => Regime::WeakForce,
        Regime::Auto if varphi == 1.0 => Regime::Marginal,
        Regime::Auto => Regime::StrongForce,
        r => r,
    };
    Ok(match regime {
        Regime::Centered => PI.sqrt() * kappa.exp() / (4.0 * kappa.powf(1.5)),
        Regime::WeakForce => {
            PI.sqrt() * (kappa * (1.0 - varphi).powi(2)).exp() / (2.0 * kappa.powf(1.5) * (1.0 - varphi))
        }
        Regime::Marginal => (kappa.sqrt() * (1.0 - z0) / marginal_constant()).ln() / (2.0 * kappa),
        Regime::StrongForce => ((varphi - z0) / (varphi - 1.0)).ln() / (2.0 * kappa),
        Regime::Auto => unreachable!(),
    })
}

/// Mean exit time from a ball of radius L in d dimensions (no force),
/// started at radius z0 L.
///
/// Uses (1/(2 d kappa)) sum_n (kappa^{n+1} - (kappa z0^2)^{n+1}) / ((n+1) (1+d/2)_n),
/// the term-wise integral of the double integral.
pub fn met_radial_interior(d: u32, kappa: f64, z0: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if d == 0 {
        return domain("dimension must be at least 1");
    }
    if !(0.0..=1.0).contains(&z0) {
        return domain(format!("radial start must lie in [0, 1], got {z0}"));
    }
    let df = d as f64;
    if kappa < BROWNIAN_KAPPA {
        return Ok((1.0 - z0 * z0) / (2.0 * df));
    }
    if z0 == 1.0 {
        return Ok(0.0);
    }
    let b = 1.0 + 0.5 * df;
    let lq = if z0 > 0.0 { 2.0 * z0.ln() } else { f64::NEG_INFINITY };
    let mut t = kappa;
    let mut sum = 0.0;
    for n in 0..100_000 {
        let m = (n + 1) as f64;
        let frac = if z0 > 0.0 { -(m * lq).exp_m1() } else { 1.0 };
        let term = t * frac / m;
        sum += term;
        if (n as f64) > kappa && term < 1e-17 * sum {
            return Ok(sum / (2.0 * df * kappa));
        }
        t *= kappa / (b + n as f64);
        if !t.is_finite() {
            break;
        }
    }
    Err(Error::NonConvergence { partial: sum / (2.0 * df * kappa), terms: 100_000 })
}

/// Mean exit time from the exterior of a ball (or of [-L, L] for d = 1),
/// started at radius z0 L >= L.
pub fn met_radial_exterior(d: u32, kappa: f64, z0: f64) -> Result<MeanExitTime> {
    check_kappa(kappa)?;
    if d == 0 {
        return domain("dimension must be at least 1");
    }
    if !(z0 >= 1.0) {
        return domain(format!("exterior start must be >= 1, got {z0}"));
    }
    if z0 == 1.0 {
        return Ok(MeanExitTime::Finite(0.0));
    }
    if kappa == 0.0 {
        return Ok(MeanExitTime::Infinite);
    }
    if z0.is_infinite() {
        return Ok(MeanExitTime::Infinite);
    }
    let h = 0.5 * d as f64;
    let v = if d % 2 == 0 {
        let mut s = 2.0 * z0.ln();
        for j in 1..(d / 2) {
            let jf = j as f64;
            s += gamma(h) / gamma(h - jf) * kappa.powf(-jf) / jf * (1.0 - z0.powf(-2.0 * jf));
        }
        s
    } else {
        let sk = kappa.sqrt();
        let mut s = 2.0 * PI.sqrt() * int_erfcx(sk, sk * z0)?;
        for j in 1..=((d as i64 - 3) / 2) {
            let jf = j as f64;
            let c = gamma(h) / gamma(h - jf) - gamma(jf + 0.5) / PI.sqrt();
            s += c * (1.0 - z0.powf(-2.0 * jf)) / (jf * kappa.powf(jf));
        }
        let kz = kappa * z0 * z0;
        for j in 1..=((d - 1) / 2) {
            let jf = j as f64;
            let g = gamma(h - jf);
            s += g * (erfcx(sk) * kappa.powf(jf - h) - erfcx(sk * z0) * kz.powf(jf - h));
        }
        s
    };
    Ok(MeanExitTime::Finite(v / (4.0 * kappa)))
}

/// Mean first passage time to L from x0 = z0 L > L with a constant force.
pub fn met_exterior_1d_forced(kappa: f64, varphi: f64, z0: f64) -> Result<MeanExitTime> {
    check_kappa(kappa)?;
    if !(z0 >= 1.0) {
        return domain(format!("exterior start must be >= 1, got {z0}"));
    }
    if z0 == 1.0 {
        return Ok(MeanExitTime::Finite(0.0));
    }
    if kappa == 0.0 || z0.is_infinite() {
        return Ok(MeanExitTime::Infinite);
    }
    let s = kappa.sqrt();
    let v = int_erfcx(s * (1.0 - varphi), s * (z0 - varphi))?;
    Ok(MeanExitTime::Finite(PI.sqrt() / (2.0 * kappa) * v))
}
