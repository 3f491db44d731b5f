//! Problems solved with the same spectral machinery but outside the
//! interval/ball family: a single absorbing level, the piecewise quadratic
//! double well, a square-root moving envelope and CTRW (Mittag-Leffler)
//! survival.

use std::f64::consts::PI;

use roots::find_root_brent;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ou_model::DoubleWellParams;
use crate::quad::gauss_kronrod;
use crate::specfun::{digamma, erf, kummer_m, mittag_leffler, parabolic_d_scaled, parabolic_d_scaled_dnu, rgamma};
use crate::spectral::{build_basis, Conv, SpectralBasis, SpectralGeometry, SpectralValue, SpectralWarning};

/// e^{z^2/4} D_nu(z).
fn ds(nu: f64, z: f64) -> Result<f64> {
    Ok(parabolic_d_scaled(nu, z)?.value)
}

fn ds_dnu(nu: f64, z: f64) -> Result<f64> {
    Ok(parabolic_d_scaled_dnu(nu, z)?.value)
}

/// Ds_nu on a grid over (z_lo, z_hi) with several points between
/// neighbouring zeros (their spacing is about pi/sqrt(nu));
/// beyond 2 sqrt(nu) + 6 the function has no zeros.
fn zero_scan(nu: f64, z_lo: f64) -> Result<Vec<f64>> {
    let z_hi = z_lo.max(2.0 * nu.max(0.0).sqrt() + 6.0);
    let n = 12 * (nu.max(0.0).ceil() as usize + 4);
    let h = (z_hi - z_lo) / n as f64;
    (0..n).map(|i| ds(nu, z_lo + (i as f64 + 0.5) * h)).collect()
}

fn sign_changes(v: impl Iterator<Item = f64>) -> usize {
    let mut prev = 0.0f64;
    let mut count = 0;
    for x in v.filter(|x| *x != 0.0) {
        if prev != 0.0 && x.signum() != prev.signum() {
            count += 1;
        }
        prev = x;
    }
    count
}

/// Sign changes of D_nu on (z_lo, infinity).
fn count_zeros(nu: f64, z_lo: f64) -> Result<usize> {
    Ok(sign_changes(zero_scan(nu, z_lo)?.into_iter()))
}

/// Brackets of the first `n` sign changes of f on (0, inf): a log grid up
/// to `step`, then a uniform grid of spacing `step`.
fn scan_brackets<F: Fn(f64) -> Result<f64>>(f: &F, step: f64, n: usize, limit: f64) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(n);
    let mut x = 1e-12 * step;
    let mut fx = f(x)?;
    let ratio = 10f64.powf(1.0 / 16.0);
    while out.len() < n {
        let next = if x < step { (x * ratio).min(step) } else { x + step };
        if next > limit {
            return Err(Error::RootFinding { lo: 0.0, hi: limit, reason: format!("found only {} of {n} roots", out.len()) });
        }
        let fn_ = f(next)?;
        if !fn_.is_finite() {
            return Err(Error::RootFinding { lo: x, hi: next, reason: "function not finite".into() });
        }
        if fn_ == 0.0 || (fx != 0.0 && fn_.signum() != fx.signum()) {
            out.push((x, next));
        }
        x = next;
        fx = fn_;
    }
    Ok(out)
}

fn refine<F: Fn(f64) -> Result<f64>>(f: &F, (lo, hi): (f64, f64)) -> Result<f64> {
    find_root_brent(lo, hi, |x| f(x).unwrap_or(f64::NAN), &mut Conv)
        .map_err(|e| Error::RootFinding { lo, hi, reason: format!("{e:?}") })
}

/// Roots of f whose k-th member must have `nodes(root) == k + offset`;
/// the scan is refined until the node counts line up.
fn guarded_roots<F, N>(f: &F, nodes: N, offset: usize, step: f64, n: usize, limit: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64>,
    N: Fn(f64) -> Result<usize>,
{
    let mut bad = (0.0, limit);
    for level in 0..5 {
        let h = step / 2f64.powi(level);
        let brackets = scan_brackets(f, h, n, limit)?;
        let roots: Vec<f64> = brackets.iter().map(|&b| refine(f, b)).collect::<Result<_>>()?;
        let mut ok = true;
        for (k, &r) in roots.iter().enumerate() {
            if nodes(r)? != k + offset {
                bad = (if k == 0 { 0.0 } else { roots[k - 1] }, r);
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(roots);
        }
    }
    Err(Error::MissedRoot { lo: bad.0, hi: bad.1 })
}

// ---------------------------------------------------------------------
// single barrier

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BarrierSide {
    /// x0 <= ell
    Below,
    /// x0 > ell
    Above,
}

/// OU process dX = -(k/gamma) X dt + sqrt(2D) dW absorbed at X = ell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleBarrierProblem {
    pub k: f64,
    pub gamma: f64,
    pub diffusion: f64,
    pub ell: f64,
    pub x0: f64,
    pub side: BarrierSide,
}

impl SingleBarrierProblem {
    pub fn new(k: f64, gamma: f64, diffusion: f64, ell: f64, x0: f64) -> Result<Self> {
        for (name, v) in [("k", k), ("gamma", gamma), ("D", diffusion)] {
            if !(v > 0.0 && v.is_finite()) {
                return domain(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(ell >= 0.0 && ell.is_finite() && x0.is_finite()) {
            return domain(format!("barrier must be finite and >= 0 (got {ell}), start finite (got {x0})"));
        }
        let side = if x0 <= ell { BarrierSide::Below } else { BarrierSide::Above };
        Ok(SingleBarrierProblem { k, gamma, diffusion, ell, x0, side })
    }

    /// Relaxation rate k/gamma.
    pub fn theta(&self) -> f64 {
        self.k / self.gamma
    }

    /// sqrt(k/(D gamma)), the inverse length of the argument of D_nu.
    fn c(&self) -> f64 {
        (self.k / (self.diffusion * self.gamma)).sqrt()
    }

    fn sign(&self) -> f64 {
        match self.side {
            BarrierSide::Below => -1.0,
            BarrierSide::Above => 1.0,
        }
    }

    fn args(&self) -> (f64, f64) {
        let c = self.sign() * self.c();
        (c * self.x0, c * self.ell)
    }
}

/// <exp(-s tau)> for the first passage to ell.
pub fn single_barrier_mgf(p: &SingleBarrierProblem, s: f64) -> Result<f64> {
    if !(s >= 0.0 && s.is_finite()) {
        return domain(format!("s must be >= 0, got {s}"));
    }
    if p.x0 == p.ell || s == 0.0 {
        return Ok(1.0);
    }
    let nu = -s / p.theta();
    let (z0, zl) = p.args();
    Ok(ds(nu, z0)? / ds(nu, zl)?)
}

/// Zeros nu_n of D_nu at the barrier with the amplitudes of the survival
/// series S(t) = sum a_n exp(-nu_n theta t).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingleBarrierSeries {
    pub problem: SingleBarrierProblem,
    pub nus: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl SingleBarrierSeries {
    pub fn new(problem: &SingleBarrierProblem, n_terms: usize) -> Result<Self> {
        if n_terms == 0 {
            return domain("need at least one term");
        }
        let (z0, zl) = problem.args();
        let f = |nu: f64| ds(nu, zl);
        let nus = guarded_roots(&f, |nu| count_zeros(nu, zl), 0, 0.25, n_terms, 1e4)?;
        let amplitudes = nus
            .iter()
            .map(|&nu| Ok(-ds(nu, z0)? / (nu * ds_dnu(nu, zl)?)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(SingleBarrierSeries { problem: problem.clone(), nus, amplitudes })
    }

    /// Time below which the last two terms still exceed 1e-8 (in the
    /// density, relative to theta).
    pub fn t_min(&self) -> f64 {
        let th = self.problem.theta();
        let n = self.nus.len();
        (n.saturating_sub(2)..n)
            .map(|i| {
                let mag = (self.amplitudes[i] * self.nus[i]).abs();
                if mag <= 1e-8 {
                    0.0
                } else {
                    (mag / 1e-8).ln() / (self.nus[i] * th)
                }
            })
            .fold(0.0, f64::max)
    }

    fn finish(&self, raw: f64, t: f64, clamp: bool) -> SpectralValue {
        let mut warning = None;
        let mut value = raw;
        if clamp {
            if !(-0.01..=1.01).contains(&raw) {
                warning = Some(SpectralWarning::Clamped);
            }
            value = raw.clamp(0.0, 1.0);
        } else if raw < 0.0 {
            value = 0.0;
            warning = Some(SpectralWarning::Clamped);
        }
        if warning.is_none() && t < self.t_min() {
            warning = Some(SpectralWarning::BelowHorizon);
        }
        SpectralValue { value, raw, terms: self.nus.len(), warning }
    }

    pub fn survival(&self, t: f64) -> Result<SpectralValue> {
        if !(t >= 0.0) {
            return domain(format!("time must be >= 0, got {t}"));
        }
        let th = self.problem.theta();
        let raw = self.amplitudes.iter().zip(&self.nus).map(|(a, nu)| a * (-nu * th * t).exp()).sum();
        Ok(self.finish(raw, t, true))
    }

    pub fn density(&self, t: f64) -> Result<SpectralValue> {
        if !(t > 0.0) {
            return domain(format!("time must be > 0, got {t}"));
        }
        let th = self.problem.theta();
        let raw = self.amplitudes.iter().zip(&self.nus).map(|(a, nu)| a * nu * th * (-nu * th * t).exp()).sum();
        Ok(self.finish(raw, t, false))
    }
}

/// Passage-time density to a level at the trap centre:
/// x0/sqrt(4 pi D) (theta/sinh(theta t))^{3/2} exp(-theta x0^2 e^{-theta t}/(4 D sinh(theta t)) + theta t/2).
pub fn single_barrier_density_at_centre(theta: f64, diffusion: f64, x0: f64, t: f64) -> f64 {
    let x0 = x0.abs();
    let y = theta * t;
    // ln(theta/sinh(y)) and e^{-y}/sinh(y) without overflow or cancellation
    let ln_ratio = theta.ln() - (y + (-(-2.0 * y).exp_m1()).ln() - std::f64::consts::LN_2);
    let e_over_sinh = 2.0 / (2.0 * y).exp_m1();
    let ln_q = x0.ln() - 0.5 * (4.0 * PI * diffusion).ln() + 1.5 * ln_ratio - theta * x0 * x0 * e_over_sinh / (4.0 * diffusion) + 0.5 * y;
    ln_q.exp()
}

/// First-passage density; the closed form at ell = 0, otherwise a
/// 60-term series.
pub fn single_barrier_density(p: &SingleBarrierProblem, t: f64) -> Result<SpectralValue> {
    if !(t > 0.0) {
        return domain(format!("time must be > 0, got {t}"));
    }
    if p.x0 == p.ell {
        return Ok(SpectralValue { value: 0.0, raw: 0.0, terms: 0, warning: None });
    }
    if p.ell == 0.0 {
        let v = single_barrier_density_at_centre(p.theta(), p.diffusion, p.x0, t);
        return Ok(SpectralValue { value: v, raw: v, terms: 0, warning: None });
    }
    SingleBarrierSeries::new(p, 60)?.density(t)
}

// ---------------------------------------------------------------------
// double well

/// Eigenpairs of the double-well generator. Mode 0 is the steady state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DoubleWellSpectrum {
    pub params: DoubleWellParams,
    pub lambdas: Vec<f64>,
    pub betas: Vec<f64>,
    /// (c1, c2): u = beta c1 Ds_nu1(-zeta1) for x <= 0 and
    /// beta c2 Ds_nu2(zeta2) for x >= 0, with Ds_nu(z) = e^{z^2/4} D_nu(z).
    pub coeffs: Vec<(f64, f64)>,
    /// Largest relative mismatch of u or u' across x = 0.
    pub junction_mismatch: Vec<f64>,
}

struct Well {
    x: f64,
    kappa: f64,
    s: f64,
}

impl Well {
    fn nu(&self, lambda: f64, diffusion: f64) -> f64 {
        lambda * self.x * self.x / (2.0 * self.kappa * diffusion)
    }
}

fn wells(p: &DoubleWellParams) -> (Well, Well) {
    (
        Well { x: p.x1, kappa: p.kappa1, s: (2.0 * p.kappa1).sqrt() },
        Well { x: p.x2, kappa: p.kappa2, s: (2.0 * p.kappa2).sqrt() },
    )
}

/// (A, B) at the junction for one well: A = Ds_nu(-s) and
/// B = 2 kappa A + s Ds_{nu+1}(-s). The one-sided derivatives of u at 0
/// are c1 B1/x1 and -c2 B2/x2.
fn junction(w: &Well, nu: f64) -> Result<(f64, f64)> {
    let a = ds(nu, -w.s)?;
    let b = 2.0 * w.kappa * a + w.s * ds(nu + 1.0, -w.s)?;
    Ok((a, b))
}

struct Junction {
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
}

impl Junction {
    fn at(p: &DoubleWellParams, lambda: f64) -> Result<Self> {
        let (w1, w2) = wells(p);
        let (a1, b1) = junction(&w1, w1.nu(lambda, p.diffusion))?;
        let (a2, b2) = junction(&w2, w2.nu(lambda, p.diffusion))?;
        Ok(Junction { a1, b1, a2, b2 })
    }

    /// Continuity of u gives (c1, c2) = (A2, A1); continuity of u' gives
    /// (x1 B2, -x2 B1). At an eigenvalue both hold, and the second is
    /// needed when u vanishes at the junction.
    fn coeffs(&self, p: &DoubleWellParams) -> (f64, f64) {
        let (w1, w2) = wells(p);
        let size_a = self.a1.abs() + self.a2.abs();
        let size_b = self.b1.abs() / w1.s + self.b2.abs() / w2.s;
        if size_a >= size_b {
            (self.a2, self.a1)
        } else {
            let c1 = p.x1 * self.b2;
            let c2 = -p.x2 * self.b1;
            let norm = (c1.abs() + c2.abs()) / size_b.max(f64::MIN_POSITIVE);
            (c1 / norm, c2 / norm)
        }
    }
}

fn dw_char(p: &DoubleWellParams, lambda: f64) -> Result<f64> {
    let j = Junction::at(p, lambda)?;
    Ok(p.x1 * j.a1 * j.b2 + p.x2 * j.a2 * j.b1)
}

/// Sign changes of the continued solution over the whole line.
fn dw_nodes(p: &DoubleWellParams, lambda: f64) -> Result<usize> {
    let (w1, w2) = wells(p);
    let (c1, c2) = Junction::at(p, lambda)?.coeffs(p);
    let left = zero_scan(w1.nu(lambda, p.diffusion), -w1.s)?;
    let right = zero_scan(w2.nu(lambda, p.diffusion), -w2.s)?;
    Ok(sign_changes(left.into_iter().rev().map(|v| c1 * v).chain(right.into_iter().map(|v| c2 * v))))
}

/// int_{-s}^inf D_nu(z)^2 dz, via the digamma identity for [0, inf) away
/// from integer orders and quadrature elsewhere.
fn d2_integral(nu: f64, s: f64) -> Result<f64> {
    let f = |z: f64| {
        let v = parabolic_d_scaled(nu, z).map(|r| r.value).unwrap_or(f64::NAN);
        v * v * (-0.5 * z * z).exp()
    };
    let head = gauss_kronrod(f, -s, 0.0, 0.0, 1e-13)?.value;
    let frac = (nu - nu.round()).abs();
    let tail = if frac > 1e-3 {
        PI.sqrt() / 2f64.powf(1.5) * (digamma(0.5 * (1.0 - nu)) - digamma(-0.5 * nu)) * rgamma(-nu)
    } else {
        let hi = 2.0 * nu.max(0.0).sqrt() + 12.0;
        gauss_kronrod(f, 0.0, hi, 0.0, 1e-13)?.value
    };
    Ok(head + tail)
}

pub fn double_well_spectrum(params: &DoubleWellParams, n_modes: usize) -> Result<DoubleWellSpectrum> {
    if n_modes == 0 {
        return domain("need at least one mode");
    }
    let p = params;
    let (w1, w2) = wells(p);
    let rate = (2.0 * p.kappa1 * p.diffusion / (p.x1 * p.x1)).min(2.0 * p.kappa2 * p.diffusion / (p.x2 * p.x2));
    let f = |l: f64| dw_char(p, l);
    let mut lambdas = vec![0.0];
    if n_modes > 1 {
        lambdas.extend(guarded_roots(&f, |l| dw_nodes(p, l), 1, 0.05 * rate, n_modes - 1, 1e4 * rate)?);
    }
    let beta0 = {
        let side = |w: &Well| w.x * w.kappa.exp() * (1.0 + erf(w.kappa.sqrt())) / w.kappa.sqrt();
        (0.5 * PI.sqrt() * (side(&w1) + side(&w2))).powf(-0.5)
    };
    let mut betas = vec![beta0];
    let mut coeffs = vec![(1.0, 1.0)];
    let mut junction_mismatch = vec![0.0];
    for &l in &lambdas[1..] {
        let (nu1, nu2) = (w1.nu(l, p.diffusion), w2.nu(l, p.diffusion));
        let j = Junction::at(p, l)?;
        let (c1, c2) = j.coeffs(p);
        let inv = w1.kappa.exp() * w1.x * c1 * c1 / w1.s * d2_integral(nu1, w1.s)?
            + w2.kappa.exp() * w2.x * c2 * c2 / w2.s * d2_integral(nu2, w2.s)?;
        if !(inv > 0.0 && inv.is_finite()) {
            return Err(Error::Quadrature { value: inv, achieved: f64::NAN });
        }
        let (u_l, u_r) = (c1 * j.a1, c2 * j.a2);
        let (d_l, d_r) = (c1 * j.b1 / w1.x, -c2 * j.b2 / w2.x);
        let xm = w1.x.min(w2.x);
        let scale = d_l.abs().max(d_r.abs()).max(u_l.abs() / xm).max(u_r.abs() / xm);
        junction_mismatch.push(((u_l - u_r).abs() / xm).max((d_l - d_r).abs()) / scale);
        betas.push(inv.powf(-0.5));
        coeffs.push((c1, c2));
    }
    Ok(DoubleWellSpectrum { params: p.clone(), lambdas, betas, coeffs, junction_mismatch })
}

/// Density of arrival positions at time t from x0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorValue {
    pub value: f64,
    pub raw: f64,
    pub warning: Option<SpectralWarning>,
}

impl DoubleWellSpectrum {
    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }

    /// Normalised eigenfunction u_n(x).
    pub fn eigenfunction(&self, n: usize, x: f64) -> Result<f64> {
        if n == 0 {
            return Ok(self.betas[0]);
        }
        let p = &self.params;
        let (w1, w2) = wells(p);
        let (c1, c2) = self.coeffs[n];
        let l = self.lambdas[n];
        Ok(if x <= 0.0 {
            self.betas[n] * c1 * ds(w1.nu(l, p.diffusion), -w1.s * (x / w1.x + 1.0))?
        } else {
            self.betas[n] * c2 * ds(w2.nu(l, p.diffusion), w2.s * (x / w2.x - 1.0))?
        })
    }

    /// Equilibrium density beta_0^2 w(x).
    pub fn equilibrium(&self, x: f64) -> f64 {
        self.betas[0] * self.betas[0] * self.params.weight(x)
    }

    /// Time below which the last retained mode still contributes 1e-8 at
    /// the start x0 (in units of the equilibrium peak).
    pub fn t_min(&self, x0: f64) -> Result<f64> {
        let n = self.n_modes();
        if n < 2 {
            return Ok(0.0);
        }
        let mut worst: f64 = 0.0;
        for i in n.saturating_sub(2).max(1)..n {
            let mag = (self.eigenfunction(i, x0)? * self.betas[i]).abs();
            if mag > 1e-8 {
                worst = worst.max((mag / 1e-8).ln() / self.lambdas[i]);
            }
        }
        Ok(worst)
    }

    /// p(x, t | x0) = sum_n u_n(x0) u_n(x) w(x) e^{-lambda_n t}.
    pub fn propagator(&self, x: f64, t: f64, x0: f64) -> Result<PropagatorValue> {
        if !(t > 0.0 && x.is_finite() && x0.is_finite()) {
            return domain("propagator needs t > 0 and finite positions");
        }
        let w = self.params.weight(x);
        let mut raw = 0.0;
        for n in 0..self.n_modes() {
            let decay = (-self.lambdas[n] * t).exp();
            if decay == 0.0 {
                break;
            }
            raw += self.eigenfunction(n, x0)? * self.eigenfunction(n, x)? * decay;
        }
        raw *= w;
        let mut warning = None;
        let mut value = raw;
        if raw < 0.0 {
            value = 0.0;
            warning = Some(SpectralWarning::Clamped);
        }
        if warning.is_none() && t < self.t_min(x0)? {
            warning = Some(SpectralWarning::BelowHorizon);
        }
        Ok(PropagatorValue { value, raw, warning })
    }
}

pub fn double_well_propagator(params: &DoubleWellParams, x: f64, t: f64, x0: f64) -> Result<PropagatorValue> {
    double_well_spectrum(params, 50)?.propagator(x, t, x0)
}

// ---------------------------------------------------------------------
// square-root envelope

/// Brownian motion in d dimensions started at radius z0 sqrt(2 b t0),
/// absorbed at |x| = sqrt(2 b (t + t0)).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqrtBoundaryProblem {
    pub d: u32,
    pub b: f64,
    pub diffusion: f64,
    pub t0: f64,
    pub z0: f64,
}

impl SqrtBoundaryProblem {
    pub fn new(d: u32, b: f64, diffusion: f64, t0: f64, z0: f64) -> Result<Self> {
        if d == 0 {
            return domain("dimension must be at least 1");
        }
        for (name, v) in [("b", b), ("D", diffusion), ("t0", t0)] {
            if !(v > 0.0 && v.is_finite()) {
                return domain(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&z0) {
            return domain(format!("scaled start must lie in [0, 1], got {z0}"));
        }
        Ok(SqrtBoundaryProblem { d, b, diffusion, t0, z0 })
    }

    /// b/(2D): the equivalent trap strength.
    pub fn kappa(&self) -> f64 {
        self.b / (2.0 * self.diffusion)
    }

    /// Physical starting radius.
    pub fn start(&self) -> f64 {
        self.z0 * (2.0 * self.b * self.t0).sqrt()
    }
}

/// Exponents nu_n and amplitudes of S(t) = sum_n a_n (1 + t/t0)^{-nu_n}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SqrtBoundarySeries {
    pub problem: SqrtBoundaryProblem,
    pub nus: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl SqrtBoundarySeries {
    pub fn new(problem: &SqrtBoundaryProblem, n_modes: usize) -> Result<Self> {
        let kappa = problem.kappa();
        let basis = build_basis(SpectralGeometry::RadialInterior, kappa, 0.0, problem.d, n_modes)?;
        Self::from_basis(problem, &basis)
    }

    fn from_basis(problem: &SqrtBoundaryProblem, basis: &SpectralBasis) -> Result<Self> {
        let kappa = problem.kappa();
        let nus = basis.alphas.iter().map(|a| a * a / (4.0 * kappa)).collect();
        Ok(SqrtBoundarySeries { problem: problem.clone(), nus, amplitudes: basis.amplitudes(problem.z0)? })
    }

    pub fn nu0(&self) -> f64 {
        self.nus[0]
    }

    /// Time below which the last mode still contributes 1e-8.
    pub fn t_min(&self) -> f64 {
        let n = self.nus.len();
        let last = (self.amplitudes[n - 1] * self.nus[n - 1]).abs();
        if last <= 1e-8 {
            0.0
        } else {
            self.problem.t0 * ((last / 1e-8).ln() / self.nus[n - 1]).exp_m1()
        }
    }

    fn finish(&self, raw: f64, t: f64, clamp: bool) -> SpectralValue {
        let mut warning = None;
        let mut value = raw;
        if clamp {
            if !(-0.01..=1.01).contains(&raw) {
                warning = Some(SpectralWarning::Clamped);
            }
            value = raw.clamp(0.0, 1.0);
        }
        if warning.is_none() && t < self.t_min() {
            warning = Some(SpectralWarning::BelowHorizon);
        }
        SpectralValue { value, raw, terms: self.nus.len(), warning }
    }

    pub fn survival(&self, t: f64) -> Result<SpectralValue> {
        if !(t >= 0.0) {
            return domain(format!("time must be >= 0, got {t}"));
        }
        let g = (t / self.problem.t0).ln_1p();
        let raw = self.amplitudes.iter().zip(&self.nus).map(|(a, nu)| a * (-nu * g).exp()).sum();
        Ok(self.finish(raw, t, true))
    }

    /// (1/t0) sum_n nu_n a_n (1 + t/t0)^{-nu_n - 1}.
    pub fn density(&self, t: f64) -> Result<SpectralValue> {
        if !(t >= 0.0) {
            return domain(format!("time must be >= 0, got {t}"));
        }
        let g = (t / self.problem.t0).ln_1p();
        let raw: f64 =
            self.amplitudes.iter().zip(&self.nus).map(|(a, nu)| a * nu * (-(nu + 1.0) * g).exp()).sum::<f64>() / self.problem.t0;
        Ok(self.finish(raw, t, false))
    }

    /// <(tau + t0)^nu> from the series, t0^nu sum_n a_n nu_n/(nu_n - nu),
    /// written as t0^nu (1 + nu sum_n a_n/(nu_n - nu)) using sum_n a_n = 1
    /// inside the envelope.
    pub fn moment(&self, nu: f64) -> Result<f64> {
        if nu >= self.nu0() {
            return Ok(f64::INFINITY);
        }
        if self.problem.z0 == 1.0 {
            return Ok(self.problem.t0.powf(nu));
        }
        let s: f64 = self.amplitudes.iter().zip(&self.nus).map(|(a, n)| a / (n - nu)).sum();
        Ok(self.problem.t0.powf(nu) * (1.0 + nu * s))
    }
}

pub fn sqrt_boundary_density(problem: &SqrtBoundaryProblem, t: f64) -> Result<SpectralValue> {
    SqrtBoundarySeries::new(problem, 30)?.density(t)
}

pub fn sqrt_boundary_survival(problem: &SqrtBoundaryProblem, t: f64) -> Result<SpectralValue> {
    SqrtBoundarySeries::new(problem, 30)?.survival(t)
}

/// <(tau + t0)^nu> = t0^nu M(-nu, d/2, b z0^2/2D) / M(-nu, d/2, b/2D);
/// infinite once nu reaches the first zero of the denominator.
pub fn sqrt_boundary_moment(problem: &SqrtBoundaryProblem, nu: f64) -> Result<f64> {
    if !nu.is_finite() {
        return domain("moment order must be finite");
    }
    let (a, k) = (0.5 * problem.d as f64, problem.kappa());
    if nu > 0.0 {
        for i in 1..=64 {
            let v = nu * i as f64 / 64.0;
            if kummer_m(-v, a, k)?.value <= 0.0 {
                return Ok(f64::INFINITY);
            }
        }
    }
    let num = kummer_m(-nu, a, k * problem.z0 * problem.z0)?.value;
    let den = kummer_m(-nu, a, k)?.value;
    Ok(problem.t0.powf(nu) * num / den)
}

// ---------------------------------------------------------------------
// CTRW

/// Survival under subdiffusion: every e^{-lambda_n t} of the interior
/// basis becomes E_alpha(-lambda_n d_alpha t^alpha). Times are in units of
/// L^2/D and `d_alpha` is D_alpha/D in the matching units.
pub fn ctrw_survival(basis: &SpectralBasis, z0: f64, t: f64, alpha: f64, d_alpha: f64) -> Result<SpectralValue> {
    if basis.geometry == SpectralGeometry::RadialExterior {
        return domain("CTRW survival needs an interior basis");
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("alpha must lie in (0, 1], got {alpha}"));
    }
    if !(d_alpha > 0.0 && d_alpha.is_finite()) {
        return domain(format!("D_alpha must be positive, got {d_alpha}"));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return domain(format!("time must be >= 0, got {t}"));
    }
    let amps = basis.amplitudes(z0)?;
    let ta = t.powf(alpha) * d_alpha;
    let mut raw = 0.0;
    let mut last = 0.0;
    for (n, amp) in amps.iter().enumerate() {
        let e = mittag_leffler(alpha, -basis.alphas[n] * basis.alphas[n] * ta)?;
        raw += amp * e;
        last = (basis.weights[n] * basis.u_max[n] * e).abs();
    }
    let mut warning = None;
    if !(-0.01..=1.01).contains(&raw) {
        warning = Some(SpectralWarning::Clamped);
    } else if last > 1e-8 {
        warning = Some(SpectralWarning::BelowHorizon);
    }
    Ok(SpectralValue { value: raw.clamp(0.0, 1.0), raw, terms: amps.len(), warning })
}

/// d/dz D_nu(z) = (z/2) D_nu(z) - D_{nu+1}(z), in scaled form:
/// d/dz Ds_nu(z) = z Ds_nu(z) - Ds_{nu+1}(z).
pub fn parabolic_d_scaled_dz(nu: f64, z: f64) -> Result<f64> {
    Ok(z * ds(nu, z)? - ds(nu + 1.0, z)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_count_of_hermite_functions() {
        // D_n(z) has n real zeros, all inside (-2 sqrt(n) - 2, 2 sqrt(n) + 2)
        for n in 0..8 {
            let lo = -2.0 * (n as f64).sqrt() - 4.0;
            assert_eq!(count_zeros(n as f64, lo).unwrap(), n);
        }
    }

    #[test]
    fn d2_identity_matches_quadrature() {
        for &nu in &[0.3, 1.7, 4.45, 9.2] {
            let frac = d2_integral(nu, 1.2).unwrap();
            let f = |z: f64| parabolic_d_scaled(nu, z).unwrap().value.powi(2) * (-0.5 * z * z).exp();
            let q = gauss_kronrod(f, -1.2, 2.0 * nu.sqrt() + 14.0, 0.0, 1e-13).unwrap().value;
            assert!((frac - q).abs() < 1e-11 * q, "{nu}: {frac} vs {q}");
        }
    }

    #[test]
    fn centre_density_reduces_to_brownian() {
        let q = single_barrier_density_at_centre(1e-9, 1.0, 1.0, 0.5);
        let bm = 1.0 / (4.0 * PI * 0.125f64).sqrt() * (-0.5f64).exp();
        assert!((q / bm - 1.0).abs() < 1e-6);
    }
}
