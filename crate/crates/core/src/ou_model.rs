//! Physical and dimensionless parameters of a trapped overdamped particle.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380649e-23;

/// Below this kappa the trap is treated as absent.
pub const BROWNIAN_KAPPA: f64 = 1e-8;

/// Drag coefficient of a sphere, 6 pi a eta.
pub fn stokes_drag(radius: f64, viscosity: f64) -> f64 {
    6.0 * std::f64::consts::PI * radius * viscosity
}

/// Harmonic trap with stiffness k, drag gamma, temperature T, constant
/// force F0 and exit half-width (or ball radius) L, in SI units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OUProblem {
    pub k: f64,
    pub gamma: f64,
    pub temperature: f64,
    pub diffusion: f64,
    pub f0: f64,
    pub l: f64,
    pub d: u32,
    pub kappa: f64,
    /// Always >= 0; a negative force is folded in by mirroring x.
    pub varphi: f64,
    /// True when the input force was negative and x has been mirrored.
    pub mirrored: bool,
    pub tau_k: f64,
    pub ell_k: f64,
    pub xhat: f64,
}

impl OUProblem {
    pub fn from_physical(k: f64, gamma: f64, temperature: f64, f0: f64, l: f64, d: u32) -> Result<Self> {
        for (name, v) in [("k", k), ("gamma", gamma), ("temperature", temperature), ("L", l)] {
            if !(v > 0.0 && v.is_finite()) {
                return domain(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !f0.is_finite() {
            return domain(format!("F0 must be finite, got {f0}"));
        }
        if d == 0 {
            return domain("dimension must be at least 1");
        }
        let kt = K_B * temperature;
        Ok(OUProblem {
            k,
            gamma,
            temperature,
            diffusion: kt / gamma,
            f0,
            l,
            d,
            kappa: k * l * l / (2.0 * kt),
            varphi: f0.abs() / (k * l),
            mirrored: f0 < 0.0,
            tau_k: gamma / k,
            ell_k: (2.0 * kt / k).sqrt(),
            xhat: f0 / k,
        })
    }

    /// L^2/D, the unit of time of every dimensionless solver.
    pub fn timescale(&self) -> f64 {
        self.l * self.l / self.diffusion
    }

    /// Rate of the discretised process for a step delta.
    pub fn theta(&self, delta: f64) -> f64 {
        self.k * delta / self.gamma
    }

    /// Starting point in units of L, mirrored if the force was negative.
    pub fn scaled_start(&self, x0: f64) -> f64 {
        let z = x0 / self.l;
        if self.mirrored {
            -z
        } else {
            z
        }
    }

    /// Boltzmann weight exp(-k x^2/(2 kT) + F0 x/kT) at physical position x.
    pub fn boltzmann_weight(&self, x: f64) -> f64 {
        let kt = K_B * self.temperature;
        (-self.k * x * x / (2.0 * kt) + self.f0 * x / kt).exp()
    }

    /// Reciprocal weight 1/w(x).
    pub fn tilde_weight(&self, x: f64) -> f64 {
        let kt = K_B * self.temperature;
        (self.k * x * x / (2.0 * kt) - self.f0 * x / kt).exp()
    }
}

/// Weight exp(-kappa z^2 + 2 kappa varphi z) with z = x/L.
pub fn boltzmann_weight_scaled(kappa: f64, varphi: f64, z: f64) -> f64 {
    (kappa * z * (2.0 * varphi - z)).exp()
}

/// Fold a negative force onto varphi >= 0 by mirroring the start.
pub fn canonicalize(varphi: f64, z0: f64) -> (f64, f64) {
    if varphi < 0.0 {
        (-varphi, -z0)
    } else {
        (varphi, z0)
    }
}

/// Piecewise quadratic double well with minima at -x1 and x2, in units
/// where lengths are physical and energies are measured in k_B T.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleWellParams {
    pub x1: f64,
    pub x2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub diffusion: f64,
}

impl DoubleWellParams {
    pub fn new(x1: f64, x2: f64, kappa1: f64, kappa2: f64, diffusion: f64) -> Result<Self> {
        for (name, v) in [("x1", x1), ("x2", x2), ("kappa1", kappa1), ("kappa2", kappa2), ("D", diffusion)] {
            if !(v > 0.0 && v.is_finite()) {
                return domain(format!("{name} must be positive and finite, got {v}"));
            }
        }
        Ok(DoubleWellParams { x1, x2, kappa1, kappa2, diffusion })
    }

    pub fn from_physical(x1: f64, x2: f64, k1: f64, k2: f64, gamma: f64, temperature: f64) -> Result<Self> {
        let kt = K_B * temperature;
        if !(gamma > 0.0 && kt > 0.0) {
            return domain("gamma and temperature must be positive");
        }
        Self::new(x1, x2, k1 * x1 * x1 / (2.0 * kt), k2 * x2 * x2 / (2.0 * kt), kt / gamma)
    }

    /// Stiffness over k_B T on each side, k_i/(k_B T) = 2 kappa_i / x_i^2.
    pub fn stiffness_kt(&self) -> (f64, f64) {
        (2.0 * self.kappa1 / (self.x1 * self.x1), 2.0 * self.kappa2 / (self.x2 * self.x2))
    }

    /// Potential offset v0/(k_B T) of the right branch.
    pub fn v0_kt(&self) -> f64 {
        self.kappa1 - self.kappa2
    }

    /// V(x)/(k_B T).
    pub fn potential_kt(&self, x: f64) -> f64 {
        if x <= 0.0 {
            let u = x / self.x1 + 1.0;
            self.kappa1 * u * u
        } else {
            let u = x / self.x2 - 1.0;
            self.kappa2 * u * u + self.v0_kt()
        }
    }

    /// Weight normalised to 1 at the origin, w(x) = exp(kappa_i [1 - (x/x_i +- 1)^2]).
    pub fn weight(&self, x: f64) -> f64 {
        if x <= 0.0 {
            let u = x / self.x1 + 1.0;
            (self.kappa1 * (1.0 - u * u)).exp()
        } else {
            let u = x / self.x2 - 1.0;
            (self.kappa2 * (1.0 - u * u)).exp()
        }
    }

    /// Drift -V'(x) D / (k_B T).
    pub fn drift(&self, x: f64) -> f64 {
        let (a1, a2) = self.stiffness_kt();
        if x <= 0.0 {
            -self.diffusion * a1 * (x + self.x1)
        } else {
            -self.diffusion * a2 * (x - self.x2)
        }
    }

    /// The same well with the labels of the two sides exchanged (x -> -x).
    pub fn swapped(&self) -> Self {
        DoubleWellParams { x1: self.x2, x2: self.x1, kappa1: self.kappa2, kappa2: self.kappa1, diffusion: self.diffusion }
    }
}
