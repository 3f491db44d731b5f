use oufet::extensions::*;
use oufet::mc_oracle::*;
use oufet::ou_model::DoubleWellParams;
use oufet::quad::gauss_kronrod;
use oufet::specfun::{parabolic_d_scaled, kummer_m};
use oufet::spectral::{build_basis, SpectralGeometry, SpectralWarning};

fn fig7() -> DoubleWellParams {
    DoubleWellParams::new(1.0, 1.0, 2.0, 1.0, 1.0).unwrap()
}

#[test]
fn derivative_identity_matches_finite_differences() {
    for &nu in &[0.0, 0.4, 1.0, 2.7, 6.3] {
        for &z in &[-2.5, -1.0, 0.0, 0.8, 2.2] {
            let h = 1e-5;
            let f = |z: f64| parabolic_d_scaled(nu, z).unwrap().value;
            let fd = (f(z + h) - f(z - h)) / (2.0 * h);
            let id = parabolic_d_scaled_dz(nu, z).unwrap();
            assert!((fd - id).abs() < 1e-7 * id.abs().max(1.0), "nu={nu} z={z}: {fd} vs {id}");
        }
    }
}

#[test]
fn double_well_ground_state_and_equilibrium() {
    let sp = double_well_spectrum(&fig7(), 12).unwrap();
    assert_eq!(sp.lambdas[0], 0.0);
    // closed-form beta_0 against direct quadrature of the weight
    let p = fig7();
    let z = gauss_kronrod(|x| p.weight(x), -12.0, 0.0, 0.0, 1e-13).unwrap().value
        + gauss_kronrod(|x| p.weight(x), 0.0, 12.0, 0.0, 1e-13).unwrap().value;
    assert!((sp.betas[0].powi(-2) / z - 1.0).abs() < 1e-12);
    for &x in &[-2.0, -1.0, -0.3, 0.0, 0.5, 1.0, 2.5] {
        let late = sp.propagator(x, 200.0, 2.0).unwrap().value;
        let eq = sp.equilibrium(x);
        assert!((late - eq).abs() < 1e-8 * eq.max(1e-3), "{x}: {late} vs {eq}");
    }
}

#[test]
fn double_well_modes_are_orthonormal_and_smooth() {
    let p = fig7();
    let sp = double_well_spectrum(&p, 8).unwrap();
    assert!(sp.lambdas.windows(2).all(|w| w[1] > w[0]));
    for (n, m) in sp.junction_mismatch.iter().enumerate() {
        assert!(*m < 1e-8, "mode {n}: junction mismatch {m}");
    }
    let inner = |a: usize, b: usize| {
        let f = |x: f64| sp.eigenfunction(a, x).unwrap() * sp.eigenfunction(b, x).unwrap() * p.weight(x);
        gauss_kronrod(f, -14.0, 0.0, 1e-13, 1e-11).unwrap().value + gauss_kronrod(f, 0.0, 14.0, 1e-13, 1e-11).unwrap().value
    };
    for a in 0..6 {
        for b in a..6 {
            let v = inner(a, b);
            let target = if a == b { 1.0 } else { 0.0 };
            assert!((v - target).abs() < 1e-8, "<u{a}, u{b}> = {v}");
        }
    }
    // continuity of u at the junction
    for n in 1..8 {
        let l = sp.eigenfunction(n, 0.0).unwrap();
        let r = sp.eigenfunction(n, 1e-300).unwrap();
        assert!((l - r).abs() < 1e-12 * l.abs().max(1.0));
    }
}

#[test]
fn symmetric_well_is_invariant_under_relabelling() {
    let p = DoubleWellParams::new(1.3, 0.7, 1.5, 2.5, 0.8).unwrap();
    let a = double_well_spectrum(&p, 6).unwrap();
    let b = double_well_spectrum(&p.swapped(), 6).unwrap();
    for (x, y) in a.lambdas.iter().zip(&b.lambdas) {
        assert!((x - y).abs() < 1e-10 * x.max(1.0));
    }
    let s = DoubleWellParams::new(1.0, 1.0, 1.5, 1.5, 1.0).unwrap();
    let sp = double_well_spectrum(&s, 5).unwrap();
    for n in 1..5 {
        // alternate parity
        let l = sp.eigenfunction(n, -0.7).unwrap();
        let r = sp.eigenfunction(n, 0.7).unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        assert!((l - sign * r).abs() < 1e-9 * l.abs().max(1e-3), "mode {n}: {l} vs {r}");
    }
}

#[test]
fn propagator_is_normalised() {
    let p = fig7();
    let sp = double_well_spectrum(&p, 50).unwrap();
    for &t in &[0.5, 2.0] {
        for &x0 in &[2.0, -2.0] {
            let f = |x: f64| sp.propagator(x, t, x0).unwrap().raw;
            let total = gauss_kronrod(f, -12.0, 0.0, 1e-12, 1e-10).unwrap().value + gauss_kronrod(f, 0.0, 12.0, 1e-12, 1e-10).unwrap().value;
            assert!((total - 1.0).abs() < 1e-6, "t={t} x0={x0}: {total}");
        }
    }
}

#[test]
fn propagator_matches_simulated_histogram() {
    let p = fig7();
    let sp = double_well_spectrum(&p, 50).unwrap();
    let cfg = SimConfig::new(1e-3, 100_000, 2.0, 41, Scheme::AR1).unwrap();
    let times = [0.5, 2.0];
    let xs = sample_positions(&Dynamics::DoubleWell(p.clone()), 2.0, &times, &cfg).unwrap();
    for (j, &t) in times.iter().enumerate() {
        let (lo, hi, nb) = (-3.0, 4.0, 50usize);
        let w = (hi - lo) / nb as f64;
        let mut counts = vec![0usize; nb];
        for &x in &xs[j] {
            let k = ((x - lo) / w).floor();
            if k >= 0.0 && (k as usize) < nb {
                counts[k as usize] += 1;
            }
        }
        let n = xs[j].len() as f64;
        let mut good = 0;
        for (k, &c) in counts.iter().enumerate() {
            let a = lo + k as f64 * w;
            let prob = gauss_kronrod(|x| sp.propagator(x, t, 2.0).unwrap().raw, a, a + w, 1e-12, 1e-10).unwrap().value;
            let se = (prob * (1.0 - prob) / n).sqrt().max(1.0 / n);
            if (c as f64 / n - prob).abs() < 3.0 * se {
                good += 1;
            }
        }
        assert!(good as f64 >= 0.95 * nb as f64, "t={t}: {good}/{nb} bins within 3 sigma");
    }
}

#[test]
fn first_relaxation_rate_from_simulated_mean() {
    // <X_t> - <X>_eq is dominated by e^{-lambda_1 t} once the faster
    // modes have died out; fit the decay between two late times
    let p = fig7();
    let sp = double_well_spectrum(&p, 4).unwrap();
    let l1 = sp.lambdas[1];
    let (t1, t2) = (1.5 / sp.lambdas[2] + 0.5, 1.5 / sp.lambdas[2] + 0.5 + 1.0 / l1);
    let cfg = SimConfig::new(2e-3, 100_000, t2, 5, Scheme::AR1).unwrap();
    let xs = sample_positions(&Dynamics::DoubleWell(p.clone()), 2.0, &[t1, t2], &cfg).unwrap();
    let mean_eq = gauss_kronrod(|x| x * sp.equilibrium(x), -12.0, 0.0, 0.0, 1e-13).unwrap().value
        + gauss_kronrod(|x| x * sp.equilibrium(x), 0.0, 12.0, 0.0, 1e-13).unwrap().value;
    let m = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64 - mean_eq;
    let rate = (m(&xs[0]) / m(&xs[1])).ln() / (t2 - t1);
    assert!((rate / l1 - 1.0).abs() < 0.1, "fitted {rate}, spectral {l1}");
}

fn barrier(ell: f64, x0: f64) -> SingleBarrierProblem {
    SingleBarrierProblem::new(1.0, 1.0, 1.0, ell, x0).unwrap()
}

#[test]
fn single_barrier_trivial_cases() {
    assert_eq!(single_barrier_mgf(&barrier(1.0, 1.0), 3.0).unwrap(), 1.0);
    assert_eq!(single_barrier_mgf(&barrier(1.0, 0.2), 0.0).unwrap(), 1.0);
    assert_eq!(barrier(1.0, 0.2).side, BarrierSide::Below);
    assert_eq!(barrier(1.0, 1.5).side, BarrierSide::Above);
    assert!(SingleBarrierProblem::new(1.0, 1.0, 1.0, -1.0, 0.0).is_err());
}

#[test]
fn single_barrier_mgf_monotonicity() {
    for &(ell, x0s) in &[(1.0, [0.9, 0.5, 0.0, -0.5]), (0.5, [0.6, 1.0, 1.5, 2.5])] {
        let mut prev_x = 2.0;
        for x0 in x0s {
            let mut prev_s = 2.0;
            for &s in &[0.1, 0.5, 1.0, 3.0] {
                let v = single_barrier_mgf(&barrier(ell, x0), s).unwrap();
                assert!(v > 0.0 && v < prev_s);
                prev_s = v;
            }
            let v = single_barrier_mgf(&barrier(ell, x0), 0.7).unwrap();
            assert!(v < prev_x, "ell={ell} x0={x0}");
            prev_x = v;
        }
    }
}

#[test]
fn single_barrier_mgf_matches_simulation() {
    let pb = barrier(1.0, 0.5);
    let exact = single_barrier_mgf(&pb, 0.7).unwrap();
    let cfg = SimConfig::new(1e-3, 100_000, 40.0, 12, Scheme::AR1BridgeCorrected).unwrap();
    let dy = Dynamics::Ou { theta: 1.0, center: 0.0, diffusion: 1.0, dim: 1 };
    let fet = simulate_fet(&dy, &Boundary::Barrier { level: 1.0 }, 0.5, &cfg).unwrap();
    let (m, se) = fet.sample_mean(|t| (-0.7 * t).exp(), 0.0);
    assert!((m - exact).abs() < 3.0 * se, "{m} +- {se} vs {exact}");
}

#[test]
fn single_barrier_series_is_consistent() {
    for &(ell, x0) in &[(1.0, 0.5), (0.5, 1.5), (1.5, -0.5)] {
        let pb = barrier(ell, x0);
        let ser = SingleBarrierSeries::new(&pb, 60).unwrap();
        assert!(ser.nus.windows(2).all(|w| w[1] > w[0]));
        // Laplace transform of the density series against the closed form
        for &s in &[0.3, 2.0] {
            // 1 - s sum a_n/(nu_n + s) converges faster than sum a_n nu_n/(nu_n + s);
            // the omitted tail is s times a slowly decaying sum
            let lt = 1.0 - s * ser.amplitudes.iter().zip(&ser.nus).map(|(a, nu)| a / (nu + s)).sum::<f64>();
            let mgf = single_barrier_mgf(&pb, s).unwrap();
            assert!((lt - mgf).abs() < 2e-4 * s, "ell={ell} x0={x0} s={s}: {lt} vs {mgf}");
        }
        let t_lo = ser.t_min().max(0.02);
        let head = 1.0 - ser.survival(t_lo).unwrap().raw;
        let body = gauss_kronrod(|t| ser.density(t).unwrap().raw, t_lo, 60.0, 1e-12, 1e-10).unwrap().value;
        let tail = ser.survival(60.0).unwrap().raw;
        assert!((head + body + tail - 1.0).abs() < 1e-3);
        assert!(ser.density(1.0).unwrap().value > 0.0);
    }
}

#[test]
fn density_at_the_centre() {
    // closed form against the series with odd nu_n
    let pb = barrier(0.0, 1.0);
    let ser = SingleBarrierSeries::new(&pb, 30).unwrap();
    for (n, nu) in ser.nus.iter().take(5).enumerate() {
        assert!((nu - (2 * n + 1) as f64).abs() < 1e-9, "{nu}");
    }
    for &t in &[0.5, 1.0, 3.0] {
        let closed = single_barrier_density(&pb, t).unwrap().value;
        let series = ser.density(t).unwrap().value;
        assert!((closed - series).abs() < 1e-8 * closed, "{t}: {closed} vs {series}");
    }
    let q = single_barrier_density_at_centre(1e-9, 1.0, 1.0, 0.5);
    let bm = 1.0 / (4.0 * std::f64::consts::PI * 0.125f64).sqrt() * (-0.5f64).exp();
    assert!((q / bm - 1.0).abs() < 1e-6);
}

#[test]
fn density_at_the_centre_matches_simulation() {
    let q = single_barrier_density(&barrier(0.0, 1.0), 1.0).unwrap().value;
    let cfg = SimConfig::new(1e-3, 100_000, 1.2, 77, Scheme::AR1BridgeCorrected).unwrap();
    let dy = Dynamics::Ou { theta: 1.0, center: 0.0, diffusion: 1.0, dim: 1 };
    let fet = simulate_fet(&dy, &Boundary::Barrier { level: 0.0 }, 1.0, &cfg).unwrap();
    let h = 0.05;
    let (s1, _) = fet.survival_at(1.0 - h);
    let (s2, _) = fet.survival_at(1.0 + h);
    let p = s1 - s2;
    let est = p / (2.0 * h);
    let se = (p * (1.0 - p) / fet.n_paths() as f64).sqrt() / (2.0 * h);
    assert!((est - q).abs() < 3.0 * se, "{est} +- {se} vs {q}");
}

#[test]
fn square_root_envelope_exponent() {
    let pr = SqrtBoundaryProblem::new(1, 1.0, 1.0, 1.0, 0.0).unwrap();
    let ser = SqrtBoundarySeries::new(&pr, 20).unwrap();
    assert!((ser.nu0() - 1.0).abs() < 1e-12, "{}", ser.nu0());
    assert_eq!(sqrt_boundary_moment(&pr, 1.0).unwrap(), f64::INFINITY);
    assert_eq!(sqrt_boundary_moment(&pr, 0.0).unwrap(), 1.0);
    // survival tail t^{-nu_0}
    let (a, b) = (ser.survival(1e4).unwrap().raw, ser.survival(1e5).unwrap().raw);
    assert!(((a / b).log10() - 1.0).abs() < 1e-3);
}

#[test]
fn square_root_envelope_moments() {
    for &(d, b, z0) in &[(1u32, 0.5, 0.0), (1, 0.5, 0.6), (3, 0.8, 0.3)] {
        let pr = SqrtBoundaryProblem::new(d, b, 1.0, 2.0, z0).unwrap();
        let ser = SqrtBoundarySeries::new(&pr, 40).unwrap();
        for &nu in &[0.3, 0.7] {
            let closed = sqrt_boundary_moment(&pr, nu).unwrap();
            let series = ser.moment(nu).unwrap();
            assert!((closed / series - 1.0).abs() < 1e-6, "{d} {b} {z0} {nu}: {closed} vs {series}");
        }
        // finite mean regime: the density carries unit mass
        let t_lo = ser.t_min();
        let body = gauss_kronrod(|u: f64| ser.density(u.exp() - 1.0).unwrap().raw * u.exp(), (1.0 + t_lo).ln(), 40.0, 1e-12, 1e-9).unwrap().value;
        let total = 1.0 - ser.survival(t_lo).unwrap().raw + body;
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }
    let pr = SqrtBoundaryProblem::new(1, 0.5, 1.0, 1.0, 0.0).unwrap();
    let m = kummer_m(-0.3, 0.5, 0.25).unwrap().value;
    assert!((sqrt_boundary_moment(&pr, 0.3).unwrap() - 1.0 / m).abs() < 1e-14);
}

#[test]
fn square_root_moment_matches_simulation() {
    let pr = SqrtBoundaryProblem::new(1, 0.5, 1.0, 1.0, 0.0).unwrap();
    let exact = sqrt_boundary_moment(&pr, 0.3).unwrap();
    let cfg = SimConfig::new(1e-3, 100_000, 1e4, 19, Scheme::AR1BridgeCorrected).unwrap();
    let fet = simulate_fet(&Dynamics::brownian(1.0, 1), &Boundary::SqrtEnvelope { b: 0.5, t0: 1.0 }, 0.0, &cfg).unwrap();
    let (m, se) = fet.sample_mean(|t| (t + 1.0).powf(0.3), (1e4 + 1.0f64).powf(0.3));
    assert!((m - exact).abs() < 3.0 * se, "{m} +- {se} vs {exact}");
}

#[test]
fn ctrw_reduces_to_ordinary_survival() {
    let basis = build_basis(SpectralGeometry::Interval1D, 1.0, 0.3, 1, 30).unwrap();
    for &t in &[0.05, 0.2, 1.0, 3.0] {
        let a = ctrw_survival(&basis, 0.1, t, 1.0, 1.0).unwrap().value;
        let b = basis.survival(0.1, t).unwrap().value;
        assert!((a - b).abs() < 1e-10, "{t}: {a} vs {b}");
    }
}

#[test]
fn ctrw_power_law_tail() {
    let basis = build_basis(SpectralGeometry::Interval1D, 1.0, 0.0, 1, 30).unwrap();
    let s = |t: f64| ctrw_survival(&basis, 0.0, t, 0.5, 1.0).unwrap().value;
    let slope = (s(1e4) / s(1e2)).ln() / 100f64.ln();
    assert!((slope + 0.5).abs() < 0.05, "{slope}");
    let mut prev = 1.0;
    for i in 0..40 {
        let v = s(10f64.powf(-3.0 + 0.2 * i as f64));
        assert!(v <= prev + 1e-12);
        prev = v;
    }
    let t = basis.t_min();
    let v = ctrw_survival(&basis, 0.0, t, 0.8, 1.0).unwrap();
    assert!((0.0..=1.0).contains(&v.value));
    assert!(ctrw_survival(&basis, 0.0, 1.0, 1.5, 1.0).is_err());
    let ext = build_basis(SpectralGeometry::RadialExterior, 1.0, 0.0, 3, 5).unwrap();
    assert!(ctrw_survival(&ext, 2.0, 1.0, 0.5, 1.0).is_err());
    let _ = SpectralWarning::BelowHorizon;
}
