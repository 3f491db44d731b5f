//! Spectral decomposition of the backward Fokker-Planck operator on an
//! interval, inside a ball and outside a ball.
//!
//! Lengths are in units of L and times in units of L^2/D, so eigenvalues
//! are lambda_n = alpha_n^2. Eigenfunctions are left unnormalised; the
//! weights w_n absorb the normalisation so that
//! S(x0, t) = sum_n w_n exp(-alpha_n^2 t) u_n(x0).

use std::f64::consts::PI;

use rayon::prelude::*;
use roots::{find_root_brent, Convergency};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ou_model::BROWNIAN_KAPPA;
use crate::quad::gauss_kronrod_best;
use crate::specfun::{hyp0f1, kummer_m, kummer_m_da, rgamma, tricomi_u, tricomi_u_da};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralGeometry {
    Interval1D,
    RadialInterior,
    RadialExterior,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightRoute {
    /// beta_n from quadrature times the boundary flux of u_n.
    Integral,
    /// Residue of the moment-generating function at s = -alpha_n^2.
    Residue,
    Both,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralBasis {
    pub geometry: SpectralGeometry,
    pub kappa: f64,
    /// Canonical (>= 0) force; see `mirrored`.
    pub varphi: f64,
    pub mirrored: bool,
    pub d: u32,
    pub brownian: bool,
    pub alphas: Vec<f64>,
    /// (c1, c2) with u = c1 m1 - c2 m2 on the interval; (1, 0) otherwise.
    pub coeff_pairs: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    pub weights_integral: Vec<f64>,
    pub weights_residue: Vec<f64>,
    pub betas: Vec<f64>,
    /// |F(alpha)/(alpha F'(alpha))| at each root.
    pub residuals: Vec<f64>,
    /// Rough sup of |u_n| over the domain.
    pub u_max: Vec<f64>,
    pub n_modes: usize,
    pub weight_route: WeightRoute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralWarning {
    /// t below the horizon where the first omitted mode is negligible.
    BelowHorizon,
    /// The raw sum left [-0.01, 1.01] and was clamped.
    Clamped,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralValue {
    pub value: f64,
    pub raw: f64,
    pub terms: usize,
    pub warning: Option<SpectralWarning>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightRow {
    pub n: usize,
    pub alpha: f64,
    pub integral: f64,
    pub residue: f64,
    pub rel_diff: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightReport {
    pub rows: Vec<WeightRow>,
    pub max_rel_diff: f64,
}

fn km(a: f64, b: f64, z: f64) -> Result<f64> {
    Ok(kummer_m(a, b, z)?.value)
}

fn km_da(a: f64, b: f64, z: f64) -> Result<f64> {
    Ok(kummer_m_da(a, b, z)?.value)
}

fn tu(a: f64, b: f64, z: f64) -> Result<f64> {
    Ok(tricomi_u(a, b, z)?.value)
}

/// The operator for one geometry and parameter set.
#[derive(Clone, Copy, Debug)]
struct Op {
    geom: SpectralGeometry,
    kappa: f64,
    varphi: f64,
    b: f64,
    d: f64,
    brownian: bool,
}

impl Op {
    fn yl(&self) -> f64 {
        -1.0 - self.varphi
    }

    fn yr(&self) -> f64 {
        1.0 - self.varphi
    }

    fn a(&self, alpha: f64) -> f64 {
        -alpha * alpha / (4.0 * self.kappa)
    }

    // m1(y) = M(a, 1/2, kappa y^2), m2(y) = y M(a + 1/2, 3/2, kappa y^2)
    fn m1(&self, a: f64, y: f64) -> Result<f64> {
        km(a, 0.5, self.kappa * y * y)
    }

    fn m2(&self, a: f64, y: f64) -> Result<f64> {
        Ok(y * km(a + 0.5, 1.5, self.kappa * y * y)?)
    }

    fn m1_a(&self, a: f64, y: f64) -> Result<f64> {
        km_da(a, 0.5, self.kappa * y * y)
    }

    fn m2_a(&self, a: f64, y: f64) -> Result<f64> {
        Ok(y * km_da(a + 0.5, 1.5, self.kappa * y * y)?)
    }

    fn m1_y(&self, a: f64, y: f64) -> Result<f64> {
        let k = self.kappa;
        Ok(4.0 * k * y * a * km(a + 1.0, 1.5, k * y * y)?)
    }

    fn m2_y(&self, a: f64, y: f64) -> Result<f64> {
        let k = self.kappa;
        let z = k * y * y;
        let a2 = a + 0.5;
        Ok(km(a2, 1.5, z)? + 2.0 * z * (a2 / 1.5) * km(a2 + 1.0, 2.5, z)?)
    }

    /// Interval determinant as a function of the Kummer parameter.
    fn det(&self, a: f64) -> Result<f64> {
        let (yl, yr) = (self.yl(), self.yr());
        Ok(self.m1(a, yl)? * self.m2(a, yr)? - self.m2(a, yl)? * self.m1(a, yr)?)
    }

    /// Rounding bound on `det`, from the error estimates of its four factors.
    fn det_err(&self, a: f64) -> Result<f64> {
        let (yl, yr) = (self.yl(), self.yr());
        let k = self.kappa;
        let m = |y: f64| kummer_m(a, 0.5, k * y * y);
        let n = |y: f64| kummer_m(a + 0.5, 1.5, k * y * y).map(|r| r.scaled(y));
        let (p1, p2, q1, q2) = (m(yl)?, n(yr)?, n(yl)?, m(yr)?);
        let e = |x: &crate::specfun::HypergeomResult| x.abs_err_estimate + f64::EPSILON * x.value.abs();
        Ok(e(&p1) * p2.value.abs() + p1.value.abs() * e(&p2) + e(&q1) * q2.value.abs() + q1.value.abs() * e(&q2))
    }

    fn det_a(&self, a: f64) -> Result<f64> {
        let (yl, yr) = (self.yl(), self.yr());
        let (p1, p2, q1, q2) = (self.m1(a, yl)?, self.m2(a, yr)?, self.m2(a, yl)?, self.m1(a, yr)?);
        let (dp1, dp2, dq1, dq2) = (self.m1_a(a, yl)?, self.m2_a(a, yr)?, self.m2_a(a, yl)?, self.m1_a(a, yr)?);
        Ok(dp1 * p2 + p1 * dp2 - dq1 * q2 - q1 * dq2)
    }

    /// Characteristic function whose positive zeros are the alpha_n.
    fn char_fn(&self, alpha: f64) -> Result<f64> {
        use SpectralGeometry::*;
        match (self.geom, self.brownian) {
            (Interval1D, true) => Ok((2.0 * alpha).sin()),
            (Interval1D, false) => self.det(self.a(alpha)),
            (RadialInterior, true) => Ok(hyp0f1(self.b, -0.25 * alpha * alpha)),
            (RadialInterior, false) => km(self.a(alpha), self.b, self.kappa),
            (RadialExterior, _) => tu(self.a(alpha), self.b, self.kappa),
        }
    }

    fn char_dalpha(&self, alpha: f64) -> Result<f64> {
        use SpectralGeometry::*;
        let da = -alpha / (2.0 * self.kappa);
        match (self.geom, self.brownian) {
            (Interval1D, true) => Ok(2.0 * (2.0 * alpha).cos()),
            (Interval1D, false) => Ok(self.det_a(self.a(alpha))? * da),
            (RadialInterior, true) => Ok(-alpha / (2.0 * self.b) * hyp0f1(self.b + 1.0, -0.25 * alpha * alpha)),
            (RadialInterior, false) => Ok(km_da(self.a(alpha), self.b, self.kappa)? * da),
            (RadialExterior, _) => Ok(tricomi_u_da(self.a(alpha), self.b, self.kappa)?.value * da),
        }
    }

    fn coeffs(&self, alpha: f64) -> Result<(f64, f64)> {
        if self.geom == SpectralGeometry::Interval1D && !self.brownian {
            let a = self.a(alpha);
            Ok((self.m2(a, self.yr())?, self.m1(a, self.yr())?))
        } else {
            Ok((1.0, 0.0))
        }
    }

    /// Eigenfunction at x (z on the interval, r otherwise).
    fn u(&self, alpha: f64, c: (f64, f64), x: f64) -> Result<f64> {
        use SpectralGeometry::*;
        match (self.geom, self.brownian) {
            (Interval1D, true) => Ok((alpha * (x + 1.0)).sin()),
            (Interval1D, false) => {
                let (a, y) = (self.a(alpha), x - self.varphi);
                Ok(c.0 * self.m1(a, y)? - c.1 * self.m2(a, y)?)
            }
            (RadialInterior, true) => Ok(hyp0f1(self.b, -0.25 * alpha * alpha * x * x)),
            (RadialInterior, false) => km(self.a(alpha), self.b, self.kappa * x * x),
            (RadialExterior, _) => tu(self.a(alpha), self.b, self.kappa * x * x),
        }
    }

    fn du(&self, alpha: f64, c: (f64, f64), x: f64) -> Result<f64> {
        use SpectralGeometry::*;
        let k = self.kappa;
        match (self.geom, self.brownian) {
            (Interval1D, true) => Ok(alpha * (alpha * (x + 1.0)).cos()),
            (Interval1D, false) => {
                let (a, y) = (self.a(alpha), x - self.varphi);
                Ok(c.0 * self.m1_y(a, y)? - c.1 * self.m2_y(a, y)?)
            }
            (RadialInterior, true) => {
                Ok(-alpha * alpha * x / (2.0 * self.b) * hyp0f1(self.b + 1.0, -0.25 * alpha * alpha * x * x))
            }
            (RadialInterior, false) => {
                let a = self.a(alpha);
                Ok(2.0 * k * x * (a / self.b) * km(a + 1.0, self.b + 1.0, k * x * x)?)
            }
            (RadialExterior, _) => {
                let a = self.a(alpha);
                Ok(-2.0 * k * x * a * tu(a + 1.0, self.b + 1.0, k * x * x)?)
            }
        }
    }

    /// Weight of the Sturm-Liouville form.
    fn rho(&self, x: f64) -> f64 {
        let k = if self.brownian { 0.0 } else { self.kappa };
        match self.geom {
            SpectralGeometry::Interval1D => (-k * (x - self.varphi).powi(2)).exp(),
            _ => x.powf(self.d - 1.0) * (-k * x * x).exp(),
        }
    }

    /// Far end of the exterior domain where rho u^2 has dropped by 1e-18
    /// from its peak.
    fn exterior_extent(&self, alpha: f64) -> Result<f64> {
        let k = self.kappa;
        let turn = ((alpha * alpha + k * (self.d + 2.0)).sqrt() / k).max(1.0);
        let step = (0.05 / k.sqrt()).min(0.05 * turn).max(1e-3);
        let mut r = 1.0 + step;
        let mut peak = f64::NEG_INFINITY;
        for _ in 0..100_000 {
            let u = self.u(alpha, (1.0, 0.0), r)?;
            let l = (self.d - 1.0) * r.ln() - k * r * r + 2.0 * u.abs().max(1e-300).ln();
            peak = peak.max(l);
            if r > turn && l < peak - 41.5 {
                return Ok(r);
            }
            r += step;
        }
        Err(Error::RootFinding { lo: 1.0, hi: r, reason: "exterior eigenfunction does not decay".into() })
    }

    fn domain(&self, alpha: f64) -> Result<(f64, f64)> {
        Ok(match self.geom {
            SpectralGeometry::Interval1D => (-1.0, 1.0),
            SpectralGeometry::RadialInterior => (0.0, 1.0),
            SpectralGeometry::RadialExterior => (1.0, self.exterior_extent(alpha)?),
        })
    }

    /// Number of eigenvalues below alpha^2, from the zeros of the solution
    /// that satisfies the boundary condition at the far end.
    fn count_below(&self, alpha: f64) -> Result<usize> {
        use SpectralGeometry::*;
        let (lo, hi) = match self.geom {
            Interval1D => (-1.0, 1.0),
            RadialInterior => (0.0, 1.0),
            RadialExterior => {
                let k = self.kappa;
                (1.0, 1.0 + 1.5 * (alpha * alpha + k * (self.d + 2.0)).sqrt() / k)
            }
        };
        let kmax = (alpha * alpha + self.kappa * (self.d + 2.0)).sqrt() + 1.0;
        let n = ((hi - lo) * 4.0 * kmax / PI).ceil() as usize + 16;
        let a = self.a(alpha);
        let g = |x: f64| -> Result<f64> {
            match (self.geom, self.brownian) {
                (Interval1D, true) => Ok((alpha * (x + 1.0)).sin()),
                (Interval1D, false) => {
                    let (yl, y) = (self.yl(), x - self.varphi);
                    Ok(self.m2(a, yl)? * self.m1(a, y)? - self.m1(a, yl)? * self.m2(a, y)?)
                }
                _ => self.u(alpha, (1.0, 0.0), x),
            }
        };
        let h = (hi - lo) / n as f64;
        // skip the Dirichlet end of the interval, where g vanishes by construction
        let start = if self.geom == Interval1D { 1 } else { 0 };
        let mut count = 0;
        let mut prev = g(lo + start as f64 * h)?;
        for i in (start + 1)..=n {
            let v = g(lo + i as f64 * h)?;
            if v == 0.0 || (prev != 0.0 && v.signum() != prev.signum()) {
                count += 1;
            }
            if v != 0.0 {
                prev = v;
            }
        }
        Ok(count)
    }
}

pub(crate) struct Conv;

impl Convergency<f64> for Conv {
    fn is_root_found(&mut self, y: f64) -> bool {
        y == 0.0
    }

    fn is_converged(&mut self, x1: f64, x2: f64) -> bool {
        (x1 - x2).abs() <= 4.0 * f64::EPSILON * x1.abs().max(x2.abs())
    }

    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter > 300
    }
}

fn make_op(geometry: SpectralGeometry, kappa: f64, varphi: f64, d: u32) -> Result<(Op, bool)> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return domain(format!("kappa must be finite and >= 0, got {kappa}"));
    }
    if !varphi.is_finite() {
        return domain("varphi must be finite");
    }
    let d = if geometry == SpectralGeometry::Interval1D { 1 } else { d };
    if d == 0 {
        return domain("dimension must be at least 1");
    }
    if geometry != SpectralGeometry::Interval1D && varphi != 0.0 {
        return domain("radial problems are centred; varphi must be 0");
    }
    let brownian = kappa < BROWNIAN_KAPPA;
    if brownian && geometry == SpectralGeometry::RadialExterior {
        return domain("the exterior problem has no discrete spectrum without a trap (kappa > 0 required)");
    }
    let df = d as f64;
    let op = Op {
        geom: geometry,
        kappa,
        varphi: varphi.abs(),
        b: 0.5 * df,
        d: df,
        brownian,
    };
    Ok((op, varphi < 0.0))
}

fn scan(op: &Op, n_modes: usize, refine: u32) -> Result<(Vec<(f64, f64)>, f64)> {
    let mut brackets = Vec::with_capacity(n_modes);
    let sk = op.kappa.sqrt();
    let switch = if op.brownian { 0.5 } else { 0.5 * sk.min(1.0) };
    let mut grid_prev = 1e-12;
    let mut f_prev = op.char_fn(grid_prev)?;
    // log grid for the exponentially small first root
    let per_decade = 16.0 * 2f64.powi(refine as i32);
    let ratio = 10f64.powf(1.0 / per_decade);
    let mut x = grid_prev;
    let mut iter = 0usize;
    loop {
        x = if x < switch {
            (x * ratio).min(switch)
        } else {
            let h = match op.geom {
                SpectralGeometry::RadialExterior => (PI / 8.0).min(0.5 * op.kappa / x),
                _ => PI / 8.0,
            };
            x + h / 2f64.powi(refine as i32)
        };
        let f = op.char_fn(x)?;
        if !f.is_finite() {
            return Err(Error::RootFinding { lo: grid_prev, hi: x, reason: "characteristic function not finite".into() });
        }
        if f == 0.0 || f.signum() != f_prev.signum() && f_prev != 0.0 {
            brackets.push((grid_prev, x));
            if brackets.len() == n_modes {
                // step past an exact zero so the guard is evaluated off the root
                let top = if f == 0.0 { x + 1e-6 * x } else { x };
                return Ok((brackets, top));
            }
        }
        grid_prev = x;
        f_prev = f;
        iter += 1;
        if iter > 2_000_000 || x > 1e5 {
            return Err(Error::RootFinding { lo: 0.0, hi: x, reason: format!("found only {} of {n_modes} roots", brackets.len()) });
        }
    }
}

fn find_alphas(op: &Op, n_modes: usize) -> Result<Vec<f64>> {
    if op.brownian && op.geom == SpectralGeometry::Interval1D {
        return Ok((0..n_modes).map(|n| PI * (n + 1) as f64 / 2.0).collect());
    }
    let mut last_err = None;
    for refine in 0..5 {
        let (brackets, top) = scan(op, n_modes, refine)?;
        let count = op.count_below(top)?;
        if count == brackets.len() {
            let roots: Vec<Result<f64>> = brackets
                .par_iter()
                .map(|&(lo, hi)| {
                    let f = |x: f64| op.char_fn(x).unwrap_or(f64::NAN);
                    find_root_brent(lo, hi, f, &mut Conv)
                        .map_err(|e| Error::RootFinding { lo, hi, reason: format!("{e:?}") })
                })
                .collect();
            return roots.into_iter().collect();
        }
        // locate the first bracket whose upper end already disagrees
        let mut lo = 0.0;
        let mut hi = top;
        for (i, &(_, b)) in brackets.iter().enumerate() {
            if op.count_below(b)? != i + 1 {
                hi = b;
                break;
            }
            lo = b;
        }
        last_err = Some(Error::MissedRoot { lo, hi });
    }
    Err(last_err.expect("at least one scan"))
}

/// Eigenvalues, eigenfunction coefficients and weights for the first
/// `n_modes` modes. Both weight routes are computed and compared.
pub fn build_basis(geometry: SpectralGeometry, kappa: f64, varphi: f64, d: u32, n_modes: usize) -> Result<SpectralBasis> {
    if n_modes == 0 {
        return domain("n_modes must be at least 1");
    }
    let (op, mirrored) = make_op(geometry, kappa, varphi, d)?;
    let alphas = find_alphas(&op, n_modes)?;
    for w in alphas.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::RootFinding { lo: w[0], hi: w[1], reason: "roots not strictly increasing".into() });
        }
    }
    let modes: Vec<Result<ModeData>> = alphas.par_iter().map(|&alpha| mode_data(&op, alpha)).collect();
    let modes: Vec<ModeData> = modes.into_iter().collect::<Result<_>>()?;
    for (m, &alpha) in modes.iter().zip(&alphas) {
        if m.residual > 1e-10 {
            return Err(Error::RootFinding {
                lo: alpha,
                hi: alpha,
                reason: format!("root residual {:e} above tolerance", m.residual),
            });
        }
    }
    let weights = modes
        .iter()
        .map(|m| if m.w_residue.is_finite() { m.w_residue } else { m.w_integral })
        .collect();
    Ok(SpectralBasis {
        geometry,
        kappa,
        varphi: op.varphi,
        mirrored,
        d: op.d as u32,
        brownian: op.brownian,
        coeff_pairs: modes.iter().map(|m| m.c).collect(),
        weights,
        weights_integral: modes.iter().map(|m| m.w_integral).collect(),
        weights_residue: modes.iter().map(|m| m.w_residue).collect(),
        betas: modes.iter().map(|m| m.beta).collect(),
        residuals: modes.iter().map(|m| m.residual).collect(),
        u_max: modes.iter().map(|m| m.u_max).collect(),
        alphas,
        n_modes,
        weight_route: WeightRoute::Both,
    })
}

struct ModeData {
    c: (f64, f64),
    beta: f64,
    w_integral: f64,
    w_residue: f64,
    residual: f64,
    u_max: f64,
}

fn mode_data(op: &Op, alpha: f64) -> Result<ModeData> {
    use SpectralGeometry::*;
    let c = op.coeffs(alpha)?;
    let f = op.char_fn(alpha)?;
    let fd = op.char_dalpha(alpha)?;
    let residual = if f == 0.0 { 0.0 } else { (f / (alpha * fd)).abs() };
    if op.geom == Interval1D && !op.brownian {
        let root_err = op.det_err(op.a(alpha))? / (alpha * fd).abs();
        if !(root_err <= 1e-10) {
            return Err(Error::Conditioning { context: format!("eigenfunction for alpha = {alpha}"), digits: (root_err / f64::EPSILON).log10() });
        }
    }
    let (lo, hi) = op.domain(alpha)?;
    if op.geom == Interval1D && !op.brownian {
        // u is a difference of two solutions growing like e^{kappa y^2}; refuse
        // modes where that costs more than 5 digits
        let a = op.a(alpha);
        let (mut big, mut small) = (0.0f64, 0.0f64);
        for i in 0..=64 {
            let y = lo + (hi - lo) * i as f64 / 64.0 - op.varphi;
            let (p, q) = (c.0 * op.m1(a, y)?, c.1 * op.m2(a, y)?);
            big = big.max(p.abs() + q.abs());
            small = small.max((p - q).abs());
        }
        if !(big <= 1e5 * small) {
            return Err(Error::Conditioning { context: format!("eigenfunction for alpha = {alpha}"), digits: (big / small).log10() });
        }
        // the root may need more resolution than an f64 alpha has
        let edge = op.u(alpha, c, lo)?.abs().max(op.u(alpha, c, hi)?.abs());
        if !(edge <= 1e-8 * small) {
            return Err(Error::Conditioning { context: format!("eigenfunction for alpha = {alpha}"), digits: (edge / small / f64::EPSILON).log10().max(0.0) });
        }
    }
    // u carries rounding noise from the hypergeometric sums, so the rule
    // may stall short of 1e-12; 1e-9 is still far inside what is needed
    let q = gauss_kronrod_best(
        |x| {
            let u = op.u(alpha, c, x).unwrap_or(f64::NAN);
            op.rho(x) * u * u
        },
        lo,
        hi,
        1e-300,
        1e-12,
    );
    if !(q.abs_err <= 1e-9 * q.value.abs()) {
        return Err(Error::Quadrature { value: q.value, achieved: q.abs_err });
    }
    let norm = q.value;
    let beta = norm.powf(-0.5);
    let a2 = alpha * alpha;
    // int rho u = -(1/alpha^2) [rho u']_lo^hi
    let flux = match op.geom {
        Interval1D => op.rho(-1.0) * op.du(alpha, c, -1.0)? - op.rho(1.0) * op.du(alpha, c, 1.0)?,
        RadialInterior => -op.rho(1.0) * op.du(alpha, c, 1.0)?,
        RadialExterior => op.rho(1.0) * op.du(alpha, c, 1.0)?,
    };
    let w_integral = flux / (a2 * norm);
    let w_residue = match (op.geom, op.brownian) {
        (Interval1D, true) => (1.0 - (2.0 * alpha).cos()) / alpha,
        (Interval1D, false) => {
            let a = op.a(alpha);
            let (yl, yr) = (op.yl(), op.yr());
            let da = op.det_a(a)?;
            if c.0.abs() >= c.1.abs() {
                let a1 = op.m2(a, yr)? - op.m2(a, yl)?;
                4.0 * op.kappa * a1 / (c.0 * a2 * da)
            } else {
                let a2c = op.m1(a, yl)? - op.m1(a, yr)?;
                -4.0 * op.kappa * a2c / (c.1 * a2 * da)
            }
        }
        (RadialInterior, true) => 4.0 * op.b / (a2 * hyp0f1(op.b + 1.0, -0.25 * a2)),
        (RadialInterior, false) => 4.0 * op.kappa / (a2 * km_da(op.a(alpha), op.b, op.kappa)?),
        (RadialExterior, _) => 4.0 * op.kappa / (a2 * tricomi_u_da(op.a(alpha), op.b, op.kappa)?.value),
    };
    let u_max = (0..=32)
        .map(|i| op.u(alpha, c, lo + (hi - lo) * i as f64 / 32.0).map(f64::abs))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(ModeData { c, beta, w_integral, w_residue, residual, u_max })
}

impl SpectralBasis {
    fn op(&self) -> Op {
        Op {
            geom: self.geometry,
            kappa: self.kappa,
            varphi: self.varphi,
            b: 0.5 * self.d as f64,
            d: self.d as f64,
            brownian: self.brownian,
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.alphas.iter().map(|a| a * a).collect()
    }

    /// Map a caller's start to the canonical coordinate and check it.
    fn start(&self, x0: f64) -> Result<Option<f64>> {
        match self.geometry {
            SpectralGeometry::Interval1D => {
                if !(-1.0..=1.0).contains(&x0) {
                    return domain(format!("start must lie in [-1, 1], got {x0}"));
                }
                if x0.abs() == 1.0 {
                    return Ok(None);
                }
                Ok(Some(if self.mirrored { -x0 } else { x0 }))
            }
            SpectralGeometry::RadialInterior => {
                if !(0.0..=1.0).contains(&x0) {
                    return domain(format!("radial start must lie in [0, 1], got {x0}"));
                }
                Ok(if x0 == 1.0 { None } else { Some(x0) })
            }
            SpectralGeometry::RadialExterior => {
                if !(x0 >= 1.0 && x0.is_finite()) {
                    return domain(format!("exterior start must be finite and >= 1, got {x0}"));
                }
                Ok(if x0 == 1.0 { None } else { Some(x0) })
            }
        }
    }

    /// Mode amplitudes w_n u_n(x0).
    pub fn amplitudes(&self, x0: f64) -> Result<Vec<f64>> {
        let Some(x) = self.start(x0)? else {
            return Ok(vec![0.0; self.n_modes]);
        };
        let op = self.op();
        (0..self.n_modes)
            .map(|n| Ok(self.weights[n] * op.u(self.alphas[n], self.coeff_pairs[n], x)?))
            .collect()
    }

    /// Time below which the last retained mode still contributes more
    /// than 1e-8.
    pub fn t_min(&self) -> f64 {
        let n = self.n_modes;
        let lo = n.saturating_sub(2);
        (lo..n)
            .map(|i| {
                let mag = (self.weights[i] * self.u_max[i]).abs();
                if mag <= 1e-8 {
                    0.0
                } else {
                    (mag / 1e-8).ln() / (self.alphas[i] * self.alphas[i])
                }
            })
            .fold(0.0, f64::max)
    }

    fn series(&self, x0: f64, t: f64, power: i32) -> Result<(f64, usize)> {
        if !(t >= 0.0) {
            return domain(format!("time must be >= 0, got {t}"));
        }
        let amps = self.amplitudes(x0)?;
        let mut sum = 0.0;
        let mut small = 0;
        let mut used = 0;
        for (n, amp) in amps.iter().enumerate() {
            let a2 = self.alphas[n] * self.alphas[n];
            let term = amp * a2.powi(power) * (-a2 * t).exp();
            sum += term;
            used = n + 1;
            let bound = (self.weights[n] * self.u_max[n]).abs() * a2.powi(power) * (-a2 * t).exp();
            if bound < 1e-12 * sum.abs() {
                small += 1;
            } else {
                small = 0;
            }
            if small >= 2 && n >= 5 {
                break;
            }
        }
        Ok((sum, used))
    }

    fn classify(&self, raw: f64, terms: usize, t: f64, clamp: bool) -> SpectralValue {
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
        SpectralValue { value, raw, terms, warning }
    }

    /// Survival probability S(x0, t).
    pub fn survival(&self, x0: f64, t: f64) -> Result<SpectralValue> {
        let (raw, terms) = self.series(x0, t, 0)?;
        Ok(self.classify(raw, terms, t, true))
    }

    /// First exit time density q(x0, t) = -dS/dt.
    pub fn fet_density(&self, x0: f64, t: f64) -> Result<SpectralValue> {
        let (raw, terms) = self.series(x0, t, 1)?;
        Ok(self.classify(raw, terms, t, false))
    }

    /// Laplace transform of the density from the spectral sum,
    /// 1 - s sum_n w_n u_n / (alpha_n^2 + s), using sum_n w_n u_n = 1 at
    /// interior starts; this converges faster than the raw sum.
    pub fn laplace_sum(&self, x0: f64, s: f64) -> Result<f64> {
        if self.start(x0)?.is_none() {
            return Ok(1.0);
        }
        let amps = self.amplitudes(x0)?;
        let tail: f64 = amps.iter().zip(&self.alphas).map(|(amp, al)| amp / (al * al + s)).sum();
        Ok(1.0 - s * tail)
    }

    /// Mean exit time from the truncated spectral sum, sum_n w_n u_n / alpha^2.
    pub fn mean_exit(&self, x0: f64) -> Result<f64> {
        let amps = self.amplitudes(x0)?;
        Ok(amps.iter().zip(&self.alphas).map(|(amp, al)| amp / (al * al)).sum())
    }

    pub fn weights_crosscheck(&self) -> WeightReport {
        let scale = self
            .weights
            .iter()
            .zip(&self.u_max)
            .map(|(w, u)| (w * u).abs())
            .fold(0.0, f64::max);
        let rows: Vec<WeightRow> = (0..self.n_modes)
            .map(|n| {
                let (i, r) = (self.weights_integral[n], self.weights_residue[n]);
                let m = i.abs().max(r.abs());
                // modes that do not couple to a uniform initial state
                let rel_diff = if m * self.u_max[n] < 1e-13 * scale { 0.0 } else { (i - r).abs() / m };
                WeightRow { n, alpha: self.alphas[n], integral: i, residue: r, rel_diff }
            })
            .collect();
        let max_rel_diff = rows.iter().map(|r| r.rel_diff).fold(0.0, f64::max);
        WeightReport { rows, max_rel_diff }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// E[exp(-s tau)] from the ratio of hypergeometric functions.
///
/// Negative s is accepted up to the first pole -alpha_0^2.
pub fn mgf(geometry: SpectralGeometry, kappa: f64, varphi: f64, d: u32, x0: f64, s: f64) -> Result<f64> {
    let (op, mirrored) = make_op(geometry, kappa, varphi, d)?;
    if !s.is_finite() {
        return domain("s must be finite");
    }
    let x = match geometry {
        SpectralGeometry::Interval1D => {
            if !(-1.0..=1.0).contains(&x0) {
                return domain(format!("start must lie in [-1, 1], got {x0}"));
            }
            if mirrored {
                -x0
            } else {
                x0
            }
        }
        SpectralGeometry::RadialInterior => {
            if !(0.0..=1.0).contains(&x0) {
                return domain(format!("radial start must lie in [0, 1], got {x0}"));
            }
            x0
        }
        SpectralGeometry::RadialExterior => {
            if !(x0 >= 1.0 && x0.is_finite()) {
                return domain(format!("exterior start must be finite and >= 1, got {x0}"));
            }
            x0
        }
    };
    let boundary = match geometry {
        SpectralGeometry::Interval1D => x.abs() == 1.0,
        _ => x == 1.0,
    };
    if boundary || s == 0.0 {
        return Ok(1.0);
    }
    let (num, den) = mgf_parts(&op, x, s)?;
    if s < 0.0 {
        // the denominator keeps its s = 0 sign up to the first pole
        for i in 1..=16 {
            let si = s * i as f64 / 16.0;
            let (_, di) = mgf_parts(&op, x, si)?;
            if !(di > 0.0) {
                return domain(format!("s = {s} lies at or beyond the first pole of the moment-generating function"));
            }
        }
    }
    Ok(num / den)
}

/// Numerator and denominator of the MGF ratio, the denominator positive at s = 0.
fn mgf_parts(op: &Op, x: f64, s: f64) -> Result<(f64, f64)> {
    use SpectralGeometry::*;
    if op.brownian {
        let w = 0.25 * s;
        return Ok(match op.geom {
            Interval1D => {
                // cosh(sqrt(s) x)/cosh(sqrt(s)) through 0F1(;1/2;s x^2/4)
                (hyp0f1(0.5, w * x * x), hyp0f1(0.5, w))
            }
            _ => (hyp0f1(op.b, w * x * x), hyp0f1(op.b, w)),
        });
    }
    let a = s / (4.0 * op.kappa);
    Ok(match op.geom {
        Interval1D => {
            let (yl, yr, y) = (op.yl(), op.yr(), x - op.varphi);
            let (p1, p2) = ((op.m1(a, yl)?, op.m2(a, yl)?), (op.m1(a, yr)?, op.m2(a, yr)?));
            let at = (op.m1(a, y)?, op.m2(a, y)?);
            let mut best = two_point(p1, p2, at);
            if a > 0.0 {
                // solutions recessive at either end; stable when e^{kappa y^2} is large
                let ends = |y: f64| -> Result<(f64, f64)> { recessive_pair(op, a, y) };
                let alt = two_point(ends(yl)?, ends(yr)?, ends(y)?);
                if alt.2 < best.2 {
                    best = alt;
                }
            }
            if !(best.2 <= 1e-9) {
                return Err(Error::Conditioning {
                    context: format!("moment-generating function at s = {s}"),
                    digits: (best.2 / f64::EPSILON).log10(),
                });
            }
            (best.0, best.1)
        }
        RadialInterior => (km(a, op.b, op.kappa * x * x)?, km(a, op.b, op.kappa)?),
        RadialExterior => (tu(a, op.b, op.kappa * x * x)?, tu(a, op.b, op.kappa)?),
    })
}

/// Solution through 1 at both ends of the interval in the basis (f, g), from
/// the basis values at the left end, right end and evaluation point.
/// Returns numerator, denominator and a relative rounding estimate.
fn two_point(l: (f64, f64), r: (f64, f64), at: (f64, f64)) -> (f64, f64, f64) {
    let c1 = r.1 - l.1;
    let c2 = l.0 - r.0;
    let num = c1 * at.0 + c2 * at.1;
    let den = l.0 * r.1 - l.1 * r.0;
    let t_num = (r.1.abs() + l.1.abs()) * at.0.abs() + (l.0.abs() + r.0.abs()) * at.1.abs();
    let t_den = (l.0 * r.1).abs() + (l.1 * r.0).abs();
    let err = f64::EPSILON * (t_num / num.abs() + t_den / den.abs());
    (num, den, if err.is_finite() { err } else { f64::INFINITY })
}

/// For a > 0: the solutions U(a, 1/2, kappa y^2) continued smoothly from
/// y < 0 and from y > 0 respectively.
fn recessive_pair(op: &Op, a: f64, y: f64) -> Result<(f64, f64)> {
    let z = op.kappa * y * y;
    let ue = if z == 0.0 { PI.sqrt() * rgamma(a + 0.5) } else { tu(a, 0.5, z)? };
    let v = 2.0 * (PI * op.kappa).sqrt() * rgamma(a) * y.abs() * km(a + 0.5, 1.5, z)?;
    Ok(if y > 0.0 { (ue + 2.0 * v, ue) } else { (ue, ue + 2.0 * v) })
}
