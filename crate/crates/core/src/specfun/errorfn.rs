//! Error-function family and the Dawson integral.

const FRAC_1_SQRT_PI: f64 = 0.564189583547756286948079451561;

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function exp(x^2) erfc(x).
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        if x < -26.6 {
            return f64::INFINITY;
        }
        return 2.0 * exp_sq(x) - erfcx(-x);
    }
    if x < 2.0 {
        return exp_sq(x) * erfc(x);
    }
    if x > 1e8 {
        return FRAC_1_SQRT_PI / x;
    }
    // Lentz evaluation of x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..5000 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    FRAC_1_SQRT_PI / f
}

/// exp(x^2) with the rounding error of x^2 folded back in.
pub fn exp_sq(x: f64) -> f64 {
    let h = x * x;
    let l = x.mul_add(x, -h);
    h.exp() * (1.0 + l)
}

/// Imaginary error function erfi(x) = -i erf(ix).
pub fn erfi(x: f64) -> f64 {
    2.0 * FRAC_1_SQRT_PI * exp_sq(x) * dawson(x)
}

/// Dawson integral F(x) = exp(-x^2) int_0^x exp(t^2) dt.
pub fn dawson(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= 10.0 { dawson_series(ax) } else { dawson_asymptotic(ax) };
    v.copysign(x)
}

fn dawson_series(x: f64) -> f64 {
    // exp(-x^2) sum x^(2n+1) / (n! (2n+1)); all terms positive
    if x == 0.0 {
        return 0.0;
    }
    let x2 = x * x;
    let mut p = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        p *= x2 / n;
        let t = p / (2.0 * n + 1.0);
        sum += t;
        if t < 1e-17 * sum {
            break;
        }
    }
    sum / exp_sq(x)
}

fn dawson_asymptotic(x: f64) -> f64 {
    // 1/(2x) sum (2n-1)!! / (2x^2)^n
    let r = 1.0 / (2.0 * x * x);
    let mut t = 1.0;
    let mut sum = 1.0;
    for n in 1..60 {
        let next = t * (2.0 * n as f64 - 1.0) * r;
        if next > t {
            break;
        }
        t = next;
        sum += t;
        if t < 1e-17 * sum {
            break;
        }
    }
    sum / (2.0 * x)
}

/// Lower regularized-free incomplete gamma gamma(s, x) by series; x >= 0.
pub fn lower_incomplete_gamma(s: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    // x^s e^-x sum x^n / (s (s+1) ... (s+n))
    let mut t = 1.0 / s;
    let mut sum = t;
    let mut n = 0.0;
    while n < 10000.0 {
        n += 1.0;
        t *= x / (s + n);
        sum += t;
        if t < 1e-17 * sum {
            break;
        }
    }
    (s * x.ln() - x).exp() * sum
}
