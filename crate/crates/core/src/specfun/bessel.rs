//! Bessel functions of the first kind for real order nu > -1 and x >= 0.

use super::gamma::{gamma, rgamma};

/// J_nu(x) for nu > -1, x >= 0.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    assert!(nu > -1.0, "bessel_j requires nu > -1");
    assert!(x >= 0.0, "bessel_j requires x >= 0");
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if x <= 1.0 {
        return ascending(nu, x);
    }
    j_sequence(nu, x, 0)[0]
}

fn ascending(nu: f64, x: f64) -> f64 {
    let h = 0.5 * x;
    let q = -h * h;
    let mut t = h.powf(nu) * rgamma(nu + 1.0);
    let mut sum = t;
    for k in 1..200 {
        let kf = k as f64;
        t *= q / (kf * (nu + kf));
        sum += t;
        if t.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// J_{nu0 + k}(x) for k = 0..=n by backward recurrence, normalised with
/// the Neumann sum (x/2)^nu0 = sum_k (nu0 + 2k) Gamma(nu0 + k)/k! J_{nu0+2k}.
pub fn j_sequence(nu0: f64, x: f64, n: usize) -> Vec<f64> {
    assert!(nu0 > -1.0 && x > 0.0);
    let m = n + x.ceil() as usize + 40 + (8.0 * x.cbrt()) as usize;
    let m = m + (m % 2);
    let mut vals = vec![0.0; m + 2];
    vals[m] = 1e-300;
    for k in (1..=m).rev() {
        let v = 2.0 * (nu0 + k as f64) / x * vals[k] - vals[k + 1];
        vals[k - 1] = v;
        if v.abs() > 1e250 {
            for w in vals[k - 1..].iter_mut() {
                *w *= 1e-250;
            }
        }
    }
    // Neumann normalisation
    let mut s = gamma(nu0 + 1.0) * vals[0];
    let mut g = gamma(nu0 + 1.0); // Gamma(nu0 + k)/k! at k = 1
    let mut k = 1;
    while 2 * k <= m {
        s += (nu0 + 2.0 * k as f64) * g * vals[2 * k];
        g *= (nu0 + k as f64) / (k as f64 + 1.0);
        k += 1;
    }
    let scale = (0.5 * x).powf(nu0) / s;
    vals.truncate(n + 1);
    for v in vals.iter_mut() {
        *v *= scale;
    }
    vals
}

/// Confluent limit function 0F1(;b;w) = sum w^n / ((b)_n n!), b > 0.
pub fn hyp0f1(b: f64, w: f64) -> f64 {
    if w == 0.0 {
        return 1.0;
    }
    if w < -1.0 {
        let s = (-w).sqrt();
        return gamma(b) * s.powf(1.0 - b) * bessel_j(b - 1.0, 2.0 * s);
    }
    let mut t = 1.0;
    let mut sum = 1.0;
    for n in 0..10000 {
        let nf = n as f64;
        t *= w / ((b + nf) * (nf + 1.0));
        sum += t;
        if t.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}
