//! Gamma, reciprocal gamma, log-gamma and digamma for real arguments.
//! Gamma and log-gamma come from libm; the rest is built on top.

use std::f64::consts::PI;

/// sin(pi x) with exact zeros at the integers.
pub fn sinpi(x: f64) -> f64 {
    if x.fract() == 0.0 {
        return 0.0;
    }
    let r = x - 2.0 * (x / 2.0).floor();
    // r in [0, 2)
    let (y, sign) = if r > 1.0 { (r - 1.0, -1.0) } else { (r, 1.0) };
    let y = if y > 0.5 { 1.0 - y } else { y };
    sign * (PI * y).sin()
}

/// cos(pi x) with exact zeros at half-integers.
pub fn cospi(x: f64) -> f64 {
    sinpi(x + 0.5)
}

/// True if x is zero or a negative integer.
pub fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x.fract() == 0.0
}

/// Gamma function. Returns +inf at the poles.
pub fn gamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return f64::INFINITY;
    }
    libm::tgamma(x)
}

/// ln|Gamma(x)|.
pub fn lgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return f64::INFINITY;
    }
    libm::lgamma_r(x).0
}

/// Sign of Gamma(x); zero at the poles.
pub fn gamma_sign(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        0.0
    } else if x > 0.0 || (x.floor() as i64) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Reciprocal gamma 1/Gamma(x), entire, zero at 0, -1, -2, ...
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x < 0.5 {
        // 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi
        let y = 1.0 - x;
        if y < 170.0 {
            return sinpi(x) * gamma(y) / PI;
        }
        let s = sinpi(x);
        return s.signum() * (s.abs().ln() + lgamma(y) - PI.ln()).exp();
    }
    if x < 170.0 {
        1.0 / gamma(x)
    } else {
        (-lgamma(x)).exp()
    }
}

/// Derivative of 1/Gamma(x).
pub fn rgamma_deriv(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        // d/dx 1/Gamma at x = -n is (-1)^n n!
        let n = -x;
        let sign = if (n as i64) % 2 == 0 { 1.0 } else { -1.0 };
        return sign * gamma(n + 1.0);
    }
    -digamma(x) * rgamma(x)
}

/// Digamma psi(x) = Gamma'(x)/Gamma(x).
pub fn digamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return f64::NAN;
    }
    if x < 0.5 {
        return digamma(1.0 - x) - PI * cospi(x) / sinpi(x);
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < 10.0 {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let r = 1.0 / (y * y);
    // Bernoulli asymptotic series
    let series = r
        * (1.0 / 12.0
            - r * (1.0 / 120.0
                - r * (1.0 / 252.0 - r * (1.0 / 240.0 - r * (1.0 / 132.0 - r * 691.0 / 32760.0)))));
    acc + y.ln() - 0.5 / y - series
}

/// Pochhammer symbol (a)_n for small nonnegative integer n.
pub fn poch(a: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |p, k| p * (a + k as f64))
}
