//! Monte Carlo first-exit times from the AR(1) discretisation, optionally
//! with a Brownian-bridge crossing correction between steps.
//!
//! Path `i` draws from ChaCha8 stream `i` keyed by the 64-bit seed, and
//! normal variates come from the Ziggurat sampler of `rand_distr`, so a
//! run is bit-reproducible whatever the thread count.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{csv_err, fmt17, CurveTable};
use crate::error::{domain, Error, Result};
use crate::ou_model::{DoubleWellParams, OUProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    AR1,
    AR1BridgeCorrected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub delta: f64,
    pub n_paths: usize,
    pub t_max: f64,
    pub seed: u64,
    pub scheme: Scheme,
}

impl SimConfig {
    pub fn new(delta: f64, n_paths: usize, t_max: f64, seed: u64, scheme: Scheme) -> Result<Self> {
        let c = SimConfig { delta, n_paths, t_max, seed, scheme };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return domain(format!("time step must be positive, got {}", self.delta));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return domain(format!("t_max must be positive, got {}", self.t_max));
        }
        if self.t_max / self.delta > 1e9 {
            return domain("t_max/delta exceeds 1e9 steps");
        }
        if self.n_paths == 0 {
            return domain("need at least one path");
        }
        Ok(())
    }

    /// tau_k/200 for a physical trap.
    pub fn default_delta(problem: &OUProblem) -> f64 {
        problem.tau_k / 200.0
    }
}

/// Drift and noise of the simulated process. `Ou` acts on every
/// coordinate, with the centre displaced along the first axis only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Dynamics {
    Ou { theta: f64, center: f64, diffusion: f64, dim: u32 },
    DoubleWell(DoubleWellParams),
}

impl Dynamics {
    /// Dimensionless OU: lengths in L, time in L^2/D.
    pub fn scaled_ou(kappa: f64, varphi: f64, dim: u32) -> Self {
        Dynamics::Ou { theta: 2.0 * kappa, center: varphi, diffusion: 1.0, dim }
    }

    pub fn from_problem(p: &OUProblem) -> Self {
        Dynamics::Ou { theta: p.k / p.gamma, center: p.xhat, diffusion: p.diffusion, dim: p.d }
    }

    pub fn brownian(diffusion: f64, dim: u32) -> Self {
        Dynamics::Ou { theta: 0.0, center: 0.0, diffusion, dim }
    }

    fn dim(&self) -> usize {
        match self {
            Dynamics::Ou { dim, .. } => *dim as usize,
            Dynamics::DoubleWell(_) => 1,
        }
    }

    fn diffusion(&self) -> f64 {
        match self {
            Dynamics::Ou { diffusion, .. } => *diffusion,
            Dynamics::DoubleWell(p) => p.diffusion,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Dynamics::Ou { theta, center, diffusion, dim } => {
                if !(*theta >= 0.0 && theta.is_finite() && center.is_finite()) {
                    return domain("OU rate must be >= 0 and the centre finite");
                }
                if !(*diffusion > 0.0 && diffusion.is_finite()) {
                    return domain("diffusion coefficient must be positive");
                }
                if *dim == 0 {
                    return domain("dimension must be at least 1");
                }
                if *dim > 1 && *center != 0.0 {
                    return domain("a displaced centre is only supported in one dimension");
                }
                Ok(())
            }
            Dynamics::DoubleWell(_) => Ok(()),
        }
    }
}

/// Exact OU transition over a fixed step h: x -> c + (x - c) decay + sd g.
/// The double well uses the branch of the current position.
#[derive(Clone, Copy)]
struct Kernel {
    h: f64,
    left: (f64, f64, f64),
    right: (f64, f64, f64),
    split: bool,
}

impl Kernel {
    fn new(dynamics: &Dynamics, h: f64) -> Self {
        let coeffs = |theta: f64, center: f64, diff: f64| {
            if theta * h < 1e-12 {
                (center, 1.0 - theta * h, (2.0 * diff * h).sqrt())
            } else {
                (center, (-theta * h).exp(), (diff * -(-2.0 * theta * h).exp_m1() / theta).sqrt())
            }
        };
        match dynamics {
            Dynamics::Ou { theta, center, diffusion, .. } => {
                let c = coeffs(*theta, *center, *diffusion);
                Kernel { h, left: c, right: c, split: false }
            }
            Dynamics::DoubleWell(p) => {
                let (a1, a2) = p.stiffness_kt();
                Kernel {
                    h,
                    left: coeffs(p.diffusion * a1, -p.x1, p.diffusion),
                    right: coeffs(p.diffusion * a2, p.x2, p.diffusion),
                    split: true,
                }
            }
        }
    }

    fn step<R: Rng>(&self, x: &mut [f64], rng: &mut R) {
        let (center, decay, sd) = if self.split && x[0] > 0.0 { self.right } else { self.left };
        for (i, xi) in x.iter_mut().enumerate() {
            let c = if i == 0 { center } else { 0.0 };
            let g: f64 = rng.sample(StandardNormal);
            *xi = c + (*xi - c) * decay + sd * g;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Boundary {
    Interval { lo: f64, hi: f64 },
    /// Exit on |x| >= radius.
    Ball { radius: f64 },
    /// Exit on |x| <= radius.
    Exterior { radius: f64 },
    /// One-dimensional level, approached from the side of the start.
    Barrier { level: f64 },
    /// Exit on |x| >= sqrt(2 b (t + t0)); the step grows with the envelope
    /// area, delta (1 + t/t0).
    SqrtEnvelope { b: f64, t0: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExitSide {
    Lower,
    Upper,
    Censored,
}

impl ExitSide {
    pub fn label(self) -> &'static str {
        match self {
            ExitSide::Lower => "lower",
            ExitSide::Upper => "upper",
            ExitSide::Censored => "censored",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalFET {
    /// Exit times of the paths that exited, in path order.
    pub exit_times: Vec<f64>,
    /// One entry per path.
    pub exit_sides: Vec<ExitSide>,
    pub censored_count: usize,
    pub seed: u64,
    pub delta: f64,
    pub t_max: f64,
}

/// Mean of the exit times; with censored paths it is only a lower bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub lower_bound: bool,
}

impl EmpiricalFET {
    pub fn n_paths(&self) -> usize {
        self.exit_sides.len()
    }

    /// Fraction alive after t and its binomial standard error.
    pub fn survival_at(&self, t: f64) -> (f64, f64) {
        let n = self.n_paths() as f64;
        let alive = self.exit_times.iter().filter(|&&e| e > t).count() + self.censored_count;
        let s = alive as f64 / n;
        (s, (s * (1.0 - s) / n).sqrt())
    }

    pub fn mean_exit(&self) -> MeanEstimate {
        let n = self.n_paths() as f64;
        let vals = self.exit_times.iter().copied().chain(std::iter::repeat_n(self.t_max, self.censored_count));
        let (mut s, mut s2) = (0.0, 0.0);
        for v in vals {
            s += v;
            s2 += v * v;
        }
        let mean = s / n;
        let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        MeanEstimate { mean, std_error: (var / n).sqrt(), lower_bound: self.censored_count > 0 }
    }

    /// Sample mean of f(tau) over exited paths, with censored paths
    /// contributing `censored_value`, and its standard error.
    pub fn sample_mean<F: Fn(f64) -> f64>(&self, f: F, censored_value: f64) -> (f64, f64) {
        let n = self.n_paths() as f64;
        let vals = self.exit_times.iter().map(|&t| f(t)).chain(std::iter::repeat_n(censored_value, self.censored_count));
        let (mut s, mut s2) = (0.0, 0.0);
        for v in vals {
            s += v;
            s2 += v * v;
        }
        let mean = s / n;
        let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        (mean, (var / n).sqrt())
    }

    /// Fraction of all paths that left through `side`.
    pub fn side_fraction(&self, side: ExitSide) -> (f64, f64) {
        let n = self.n_paths() as f64;
        let p = self.exit_sides.iter().filter(|&&s| s == side).count() as f64 / n;
        (p, (p * (1.0 - p) / n).sqrt())
    }

    /// One row per path: exit_time, side, censored.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "# seed: {}\r\n# delta: {}\r\n# t_max: {}\r\n", self.seed, fmt17(self.delta), fmt17(self.t_max))?;
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
        out.write_record(["exit_time", "side", "censored"]).map_err(csv_err)?;
        let mut times = self.exit_times.iter();
        for side in &self.exit_sides {
            let (t, c) = match side {
                ExitSide::Censored => (self.t_max, "true"),
                _ => (*times.next().expect("one exit time per exited path"), "false"),
            };
            out.write_record([fmt17(t).as_str(), side.label(), c]).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn check_start(dynamics: &Dynamics, boundary: &Boundary, x0: f64) -> Result<()> {
    let d = dynamics.dim();
    let ok = match *boundary {
        Boundary::Interval { lo, hi } => d == 1 && lo < x0 && x0 < hi,
        Boundary::Ball { radius } => x0.abs() < radius,
        Boundary::Exterior { radius } => x0.abs() > radius,
        Boundary::Barrier { level } => d == 1 && x0 != level,
        Boundary::SqrtEnvelope { b, t0 } => b > 0.0 && t0 > 0.0 && x0.abs() < (2.0 * b * t0).sqrt(),
    };
    if !(ok && x0.is_finite()) {
        return domain(format!("start {x0} is not strictly inside the domain {boundary:?} (dimension {d})"));
    }
    Ok(())
}

/// Exit side if x lies outside the domain at time t.
fn outside(boundary: &Boundary, x: &[f64], t: f64, from_below: bool) -> Option<ExitSide> {
    let r = || x.iter().map(|v| v * v).sum::<f64>().sqrt();
    match *boundary {
        Boundary::Interval { lo, hi } => {
            if x[0] <= lo {
                Some(ExitSide::Lower)
            } else if x[0] >= hi {
                Some(ExitSide::Upper)
            } else {
                None
            }
        }
        Boundary::Ball { radius } => (r() >= radius).then_some(ExitSide::Upper),
        Boundary::Exterior { radius } => (r() <= radius).then_some(ExitSide::Lower),
        Boundary::Barrier { level } => {
            if from_below {
                (x[0] >= level).then_some(ExitSide::Upper)
            } else {
                (x[0] <= level).then_some(ExitSide::Lower)
            }
        }
        Boundary::SqrtEnvelope { b, t0 } => {
            let l = (2.0 * b * (t + t0)).sqrt();
            if x.len() == 1 {
                if x[0] >= l {
                    Some(ExitSide::Upper)
                } else if x[0] <= -l {
                    Some(ExitSide::Lower)
                } else {
                    None
                }
            } else {
                (r() >= l).then_some(ExitSide::Upper)
            }
        }
    }
}

/// Probability that the Brownian bridge between two inside points touched
/// the boundary, per side, from the distances (a, b) at both ends:
/// exp(-a b/(D h)).
fn bridge_probs(boundary: &Boundary, x: &[f64], y: &[f64], t: f64, h: f64, diff: f64, from_below: bool) -> [(ExitSide, f64); 2] {
    // below e^-40 the probability is under the resolution of a uniform draw
    let p = |a: f64, b: f64| {
        let e = a * b / (diff * h);
        if e > 40.0 {
            0.0
        } else {
            (-e).exp()
        }
    };
    let r = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let none = (ExitSide::Censored, 0.0);
    match *boundary {
        Boundary::Interval { lo, hi } => [(ExitSide::Lower, p(x[0] - lo, y[0] - lo)), (ExitSide::Upper, p(hi - x[0], hi - y[0]))],
        Boundary::Ball { radius } => [(ExitSide::Upper, p(radius - r(x), radius - r(y))), none],
        Boundary::Exterior { radius } => [(ExitSide::Lower, p(r(x) - radius, r(y) - radius)), none],
        Boundary::Barrier { level } => {
            if from_below {
                [(ExitSide::Upper, p(level - x[0], level - y[0])), none]
            } else {
                [(ExitSide::Lower, p(x[0] - level, y[0] - level)), none]
            }
        }
        Boundary::SqrtEnvelope { b, t0 } => {
            let (l0, l1) = ((2.0 * b * (t + t0)).sqrt(), (2.0 * b * (t + h + t0)).sqrt());
            if x.len() == 1 {
                [(ExitSide::Lower, p(x[0] + l0, y[0] + l1)), (ExitSide::Upper, p(l0 - x[0], l1 - y[0]))]
            } else {
                [(ExitSide::Upper, p(l0 - r(x), l1 - r(y))), none]
            }
        }
    }
}

fn path_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

fn run_path(dynamics: &Dynamics, boundary: &Boundary, x0: f64, cfg: &SimConfig, i: usize) -> (Option<f64>, ExitSide) {
    let mut rng = path_rng(cfg.seed, i);
    let mut x = vec![0.0; dynamics.dim()];
    x[0] = x0;
    let mut y = x.clone();
    let from_below = matches!(boundary, Boundary::Barrier { level } if x0 < *level);
    let growing = match boundary {
        Boundary::SqrtEnvelope { t0, .. } => Some(*t0),
        _ => None,
    };
    let bridge = cfg.scheme == Scheme::AR1BridgeCorrected;
    let diff = dynamics.diffusion();
    let mut kernel = Kernel::new(dynamics, cfg.delta);
    let mut t = 0.0;
    while t < cfg.t_max {
        let h = match growing {
            Some(t0) => cfg.delta * (1.0 + t / t0),
            None => cfg.delta,
        }
        .min(cfg.t_max - t);
        if h != kernel.h {
            kernel = Kernel::new(dynamics, h);
        }
        y.copy_from_slice(&x);
        kernel.step(&mut y, &mut rng);
        // with the bridge, a crossing inside the step is dated at its midpoint
        let stamp = if bridge { t + 0.5 * h } else { t + h };
        if let Some(side) = outside(boundary, &y, t + h, from_below) {
            return (Some(stamp), side);
        }
        if bridge {
            let probs = bridge_probs(boundary, &x, &y, t, h, diff, from_below);
            // a uniform is drawn only when a crossing is possible at all
            if probs[0].1 + probs[1].1 > 0.0 {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (side, p) in probs {
                    acc += p;
                    if u < acc {
                        return (Some(stamp), side);
                    }
                }
            }
        }
        std::mem::swap(&mut x, &mut y);
        t += h;
    }
    (None, ExitSide::Censored)
}

/// First-exit times of `n_paths` trajectories started at x0 (the first
/// coordinate; the others start at 0).
pub fn simulate_fet(dynamics: &Dynamics, boundary: &Boundary, x0: f64, config: &SimConfig) -> Result<EmpiricalFET> {
    config.validate()?;
    dynamics.validate()?;
    check_start(dynamics, boundary, x0)?;
    let results: Vec<(Option<f64>, ExitSide)> =
        (0..config.n_paths).into_par_iter().map(|i| run_path(dynamics, boundary, x0, config, i)).collect();
    let exit_times: Vec<f64> = results.iter().filter_map(|r| r.0).collect();
    let censored_count = config.n_paths - exit_times.len();
    if censored_count == config.n_paths {
        return Err(Error::AllCensored(config.n_paths));
    }
    Ok(EmpiricalFET {
        exit_times,
        exit_sides: results.into_iter().map(|r| r.1).collect(),
        censored_count,
        seed: config.seed,
        delta: config.delta,
        t_max: config.t_max,
    })
}

/// Positions of free (unbounded) trajectories at each of the sorted
/// `times`; entry [j][i] is path i at times[j], first coordinate only.
pub fn sample_positions(dynamics: &Dynamics, x0: f64, times: &[f64], config: &SimConfig) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    dynamics.validate()?;
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|&t| !(t >= 0.0 && t <= config.t_max)) {
        return domain("sample times must be sorted and within [0, t_max]");
    }
    let per_path: Vec<Vec<f64>> = (0..config.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(config.seed, i);
            let mut x = vec![0.0; dynamics.dim()];
            x[0] = x0;
            let full = Kernel::new(dynamics, config.delta);
            let mut t = 0.0;
            let mut out = Vec::with_capacity(times.len());
            for &target in times {
                while t < target {
                    let h = config.delta.min(target - t);
                    let k = if h == config.delta { full } else { Kernel::new(dynamics, h) };
                    k.step(&mut x, &mut rng);
                    // land exactly on the target despite rounding
                    t = if target - (t + h) < 1e-12 * target { target } else { t + h };
                }
                out.push(x[0]);
            }
            out
        })
        .collect();
    Ok((0..times.len()).map(|j| per_path.iter().map(|p| p[j]).collect()).collect())
}

/// One seeded trajectory of the trapped tracer sampled every `delta`.
/// The constant force acts only inside `pulse = (start, end)` when given,
/// otherwise for the whole run.
pub fn ou_trajectory(p: &OUProblem, pulse: Option<(f64, f64)>, x0: f64, duration: f64, delta: f64, seed: u64) -> Result<CurveTable> {
    if !(delta > 0.0 && duration > 0.0 && duration.is_finite() && x0.is_finite()) {
        return domain("trajectory needs positive step and duration and a finite start");
    }
    let (free, forced) = if pulse.is_some() { (0.0, p.xhat) } else { (p.xhat, p.xhat) };
    let theta = p.k / p.gamma;
    let k_free = Kernel::new(&Dynamics::Ou { theta, center: free, diffusion: p.diffusion, dim: 1 }, delta);
    let k_forced = Kernel::new(&Dynamics::Ou { theta, center: forced, diffusion: p.diffusion, dim: 1 }, delta);
    let mut rng = path_rng(seed, 0);
    let mut table = CurveTable::new("t", "s", "x", "m")
        .with_meta("seed", seed)
        .with_meta("delta", delta)
        .with_meta("f0", p.f0)
        .with_meta("pulse", pulse.map(|(a, b)| vec![a, b]).unwrap_or_default());
    let mut x = [x0];
    table.push(0.0, x0);
    let n = (duration / delta).round() as usize;
    for i in 1..=n {
        let t = i as f64 * delta;
        let on = pulse.is_none_or(|(a, b)| t - 0.5 * delta >= a && t - 0.5 * delta < b);
        if on { k_forced } else { k_free }.step(&mut x, &mut rng);
        table.push(t, x[0]);
    }
    Ok(table)
}

/// Kaplan-Meier-style survival fraction on `t_grid`; the binomial standard
/// errors are stored under the `std_error` metadata key.
pub fn empirical_survival(fet: &EmpiricalFET, t_grid: &[f64]) -> Result<CurveTable> {
    if t_grid.iter().any(|&t| !(t > 0.0 && t <= fet.t_max)) {
        return domain("survival grid must lie in (0, t_max]");
    }
    let mut table = CurveTable::new("t", "", "S", "")
        .with_meta("n_paths", fet.n_paths())
        .with_meta("censored", fet.censored_count)
        .with_meta("seed", fet.seed)
        .with_meta("delta", fet.delta);
    let mut errs = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let (s, e) = fet.survival_at(t);
        table.push(t, s);
        errs.push(e);
    }
    table.metadata.insert("std_error".into(), errs.into());
    table.validate()?;
    Ok(table)
}
