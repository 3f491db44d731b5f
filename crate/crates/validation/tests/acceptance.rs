//! One line per acceptance criterion. Exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use oufet::extensions::*;
use oufet::mc_oracle::*;
use oufet::mean_exit::*;
use oufet::ou_model::{stokes_drag, DoubleWellParams, OUProblem};
use oufet::quad::gauss_kronrod;
use oufet::specfun::kummer::{kummer_m_buchholz, kummer_m_series};
use oufet::specfun::*;
use oufet::spectral::*;

use SpectralGeometry::*;

type Outcome = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn tracer() -> Outcome {
    let gamma = stokes_drag(1e-6, 1e-3);
    let p = OUProblem::from_physical(1e-6, gamma, 300.0, 0.0, 1e-7, 1).map_err(|e| e.to_string())?;
    let consts = [(p.gamma, 1.88e-8), (p.diffusion, 2.20e-13), (p.tau_k, 18.8e-3), (p.ell_k, 91e-9)];
    let worst_const = consts.iter().map(|&(a, b)| rel(a, b)).fold(0.0, f64::max);
    let mut lines = vec![format!("constants worst {worst_const:.2e}")];
    let mut ok = worst_const < 0.01;
    for &(scale, f0, want, tol) in &[(1.0, 0.0, 27.2e-3, 0.01), (2.0, 0.0, 517e-3, 0.01), (1.0, 0.2e-12, 9.8e-3, 0.03), (2.0, 0.2e-12, 28e-3, 0.03)] {
        let q = OUProblem::from_physical(1e-6, gamma, 300.0, f0, scale * p.ell_k, 1).map_err(|e| e.to_string())?;
        let t = met_interval(q.kappa, q.varphi, 0.0).map_err(|e| e.to_string())? * q.timescale();
        ok &= rel(t, want) < tol;
        lines.push(format!("{:.2} ms", t * 1e3));
    }
    check(ok, lines.join(", "))
}

fn brownian_limits() -> Outcome {
    let mut worst = 0.0f64;
    for &k in &[1e-9, 1e-7] {
        let cases: [(SpectralGeometry, u32, fn(usize) -> f64); 3] = [
            (Interval1D, 1, |n| PI * (n + 1) as f64 / 2.0),
            (RadialInterior, 1, |n| PI * (n as f64 + 0.5)),
            (RadialInterior, 3, |n| PI * (n + 1) as f64),
        ];
        for (g, d, f) in cases {
            let b = build_basis(g, k, 0.0, d, 10).map_err(|e| e.to_string())?;
            for n in 0..10 {
                worst = worst.max((b.alphas[n] - f(n)).abs());
            }
        }
    }
    let mut worst_met = 0.0f64;
    for &z in &[0.0, 0.3, 0.7] {
        let w = (1.0 - z * z) / 2.0;
        worst_met = worst_met.max((met_interval(1e-9, 0.0, z).unwrap() - w).abs() / w);
        for d in 1..=3 {
            let w = (1.0 - z * z) / (2.0 * d as f64);
            worst_met = worst_met.max((met_radial_interior(d, 1e-9, z).unwrap() - w).abs() / w);
        }
    }
    check(worst < 1e-4 && worst_met < 1e-6, format!("eigenvalue error {worst:.2e}, mean exit error {worst_met:.2e}"))
}

fn dual_weights() -> Outcome {
    let a = build_basis(Interval1D, 1.0, 0.5, 1, 10).map_err(|e| e.to_string())?.weights_crosscheck().max_rel_diff;
    let b = build_basis(RadialInterior, 2.0, 0.0, 3, 10).map_err(|e| e.to_string())?.weights_crosscheck().max_rel_diff;
    check(a < 1e-8 && b < 1e-8, format!("interval {a:.2e}, radial {b:.2e}"))
}

fn spectral_vs_mc() -> Outcome {
    let mut worst = 0.0f64;
    for &varphi in &[0.0, 0.9] {
        let basis = build_basis(Interval1D, 1.0, varphi, 1, 30).map_err(|e| e.to_string())?;
        let cfg = SimConfig::new(1e-4, 100_000, 2.0, 7, Scheme::AR1BridgeCorrected).map_err(|e| e.to_string())?;
        let fet = simulate_fet(&Dynamics::scaled_ou(1.0, varphi, 1), &Boundary::Interval { lo: -1.0, hi: 1.0 }, 0.0, &cfg)
            .map_err(|e| e.to_string())?;
        let n = fet.n_paths() as f64;
        for i in 1..=20 {
            let t = 0.1 * i as f64;
            let exact = basis.survival(0.0, t).map_err(|e| e.to_string())?.value;
            let se = (exact * (1.0 - exact) / n).sqrt().max(1.0 / n);
            worst = worst.max((fet.survival_at(t).0 - exact).abs() / se);
        }
    }
    check(worst < 3.0, format!("worst deviation {worst:.2} standard errors"))
}

fn specfun_dual_path() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..10 {
        let a = -50.0 + 45.0 * i as f64 / 9.0;
        for &b in &[0.5, 1.0, 1.5] {
            for j in 1..=10 {
                let z = 0.5 * j as f64;
                let s = kummer_m_series(a, b, z).map_err(|e| e.to_string())?.value;
                let h = kummer_m_buchholz(a, b, z).map_err(|e| e.to_string())?.value;
                worst = worst.max(rel(h, s));
            }
        }
    }
    let h = 1e-5;
    let mut worst_d = 0.0f64;
    for &(a, b, z) in &[(-5.0, 1.5, 1.0), (-30.0, 0.5, 3.0), (-47.3, 1.0, 4.5), (2.2, 0.5, 7.0)] {
        let fd = (kummer_m(a + h, b, z).unwrap().value - kummer_m(a - h, b, z).unwrap().value) / (2.0 * h);
        worst_d = worst_d.max(rel(kummer_m_da(a, b, z).unwrap().value, fd));
    }
    for &(a, b, z) in &[(0.7, 0.5, 1.3), (-3.4, 1.5, 2.0), (2.5, 1.0, 6.0)] {
        let fd = (tricomi_u(a + h, b, z).unwrap().value - tricomi_u(a - h, b, z).unwrap().value) / (2.0 * h);
        worst_d = worst_d.max(rel(tricomi_u_da(a, b, z).unwrap().value, fd));
    }
    for &(nu, z) in &[(0.5, 1.0), (1.7, 0.0), (-2.2, -1.5), (3.3, 2.0)] {
        let fd = (parabolic_d(nu + h, z).unwrap().value - parabolic_d(nu - h, z).unwrap().value) / (2.0 * h);
        worst_d = worst_d.max(rel(parabolic_d_dnu(nu, z).unwrap().value, fd));
    }
    check(worst <= 1e-10 && worst_d <= 1e-6, format!("Buchholz vs series {worst:.2e}, derivatives {worst_d:.2e}"))
}

fn asymptotics() -> Outcome {
    let k: f64 = 10.0;
    let lam0 = build_basis(RadialInterior, k, 0.0, 3, 1).map_err(|e| e.to_string())?.alphas[0].powi(2);
    let approx = 4.0 * k.powf(2.5) / (0.5 * PI.sqrt()) * (-k).exp();
    let r0 = lam0 / approx;
    let b = build_basis(RadialInterior, 20.0, 0.0, 3, 4).map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = (1..4).map(|n| b.alphas[n].powi(2) / (80.0 * n as f64)).collect();
    let c = marginal_constant();
    let ok0 = (r0 - 1.0).abs() <= 0.10;
    let okn = ratios.iter().all(|r| (r - 1.0).abs() <= 0.05);
    let okc = (c - 0.375).abs() <= 1e-3;
    check(
        ok0 && okn && okc,
        format!(
            "lambda_0 ratio {r0:.3} ({}), lambda_n/(4 kappa n) {:.3} {:.3} {:.3} ({}), constant {c:.6} ({})",
            if ok0 { "ok" } else { "outside 10%" },
            ratios[0],
            ratios[1],
            ratios[2],
            if okn { "ok" } else { "outside 5%" },
            if okc { "ok" } else { "off" }
        ),
    )
}

fn moment_consistency() -> Outcome {
    let h = 1e-6;
    let cases: [(SpectralGeometry, f64, f64, u32, f64, f64); 4] = [
        (Interval1D, 1.0, 0.5, 1, 0.2, met_interval(1.0, 0.5, 0.2).unwrap()),
        (RadialExterior, 1.0, 0.0, 3, 1.5, met_radial_exterior(3, 1.0, 1.5).unwrap().value()),
        (RadialInterior, 2.0, 0.0, 2, 0.3, met_radial_interior(2, 2.0, 0.3).unwrap()),
        (Interval1D, 3.0, 1.7, 1, -0.4, met_interval(3.0, 1.7, -0.4).unwrap()),
    ];
    let mut worst = 0.0f64;
    for &(g, k, p, d, x, want) in &cases {
        let up = mgf(g, k, p, d, x, h).map_err(|e| e.to_string())?;
        let dn = mgf(g, k, p, d, x, -h).map_err(|e| e.to_string())?;
        worst = worst.max(rel(-(up - dn) / (2.0 * h), want));
    }
    check(worst < 1e-5, format!("worst relative error {worst:.2e}"))
}

fn sqrt_boundary() -> Outcome {
    let pr = SqrtBoundaryProblem::new(1, 1.0, 1.0, 1.0, 0.0).map_err(|e| e.to_string())?;
    let nu0 = SqrtBoundarySeries::new(&pr, 5).map_err(|e| e.to_string())?.nu0();
    let pr = SqrtBoundaryProblem::new(1, 0.5, 1.0, 1.0, 0.0).map_err(|e| e.to_string())?;
    let exact = sqrt_boundary_moment(&pr, 0.3).map_err(|e| e.to_string())?;
    let cfg = SimConfig::new(1e-3, 100_000, 1e4, 19, Scheme::AR1BridgeCorrected).map_err(|e| e.to_string())?;
    let fet = simulate_fet(&Dynamics::brownian(1.0, 1), &Boundary::SqrtEnvelope { b: 0.5, t0: 1.0 }, 0.0, &cfg)
        .map_err(|e| e.to_string())?;
    let (m, se) = fet.sample_mean(|t| (t + 1.0).powf(0.3), (1e4 + 1.0f64).powf(0.3));
    check(
        (nu0 - 1.0).abs() < 1e-12 && (m - exact).abs() < 3.0 * se,
        format!("nu_0 = {nu0:.15}, moment {exact:.5} vs simulated {m:.5} +- {se:.5}"),
    )
}

fn double_well() -> Outcome {
    let p = DoubleWellParams::new(1.0, 1.0, 2.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    let sp = double_well_spectrum(&p, 50).map_err(|e| e.to_string())?;
    let mut worst_eq = 0.0f64;
    for &x in &[-2.0, -1.0, -0.3, 0.0, 0.5, 1.0, 2.5] {
        let late = sp.propagator(x, 200.0, 2.0).map_err(|e| e.to_string())?.value;
        let eq = sp.betas[0].powi(2) * p.weight(x);
        worst_eq = worst_eq.max((late - eq).abs() / eq.max(1e-3));
    }
    let cfg = SimConfig::new(1e-3, 100_000, 2.0, 41, Scheme::AR1).map_err(|e| e.to_string())?;
    let times = [0.5, 2.0];
    let xs = sample_positions(&Dynamics::DoubleWell(p.clone()), 2.0, &times, &cfg).map_err(|e| e.to_string())?;
    let (lo, hi, nb) = (-3.0, 4.0, 50usize);
    let w = (hi - lo) / nb as f64;
    let mut goods = vec![];
    for (j, &t) in times.iter().enumerate() {
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
            let prob = gauss_kronrod(|x| sp.propagator(x, t, 2.0).unwrap().raw, a, a + w, 1e-12, 1e-10)
                .map_err(|e| e.to_string())?
                .value;
            let se = (prob * (1.0 - prob) / n).sqrt().max(1.0 / n);
            if (c as f64 / n - prob).abs() < 3.0 * se {
                good += 1;
            }
        }
        goods.push(good);
    }
    check(
        sp.lambdas[0] == 0.0 && worst_eq < 1e-8 && goods.iter().all(|&g| g as f64 >= 0.95 * nb as f64),
        format!("lambda_0 = {}, equilibrium error {worst_eq:.2e}, bins within 3 sigma {}/{nb} and {}/{nb}", sp.lambdas[0], goods[0], goods[1]),
    )
}

fn hermite_identity() -> Outcome {
    let mut worst = 0.0f64;
    for n in 0..=5u32 {
        for i in 0..50 {
            let z = -3.0 + 6.0 * i as f64 / 49.0;
            // probabilists' Hermite polynomial by recurrence
            let (mut h0, mut h1) = (1.0, z);
            let he = match n {
                0 => 1.0,
                _ => {
                    for m in 1..n {
                        (h0, h1) = (h1, z * h1 - m as f64 * h0);
                    }
                    h1
                }
            };
            let want = (-z * z / 4.0).exp() * he;
            let got = parabolic_d(n as f64, z).map_err(|e| e.to_string())?.value;
            worst = worst.max((got - want).abs() / want.abs().max(1.0));
        }
    }
    check(worst <= 1e-12, format!("worst error {worst:.2e}"))
}

fn ctrw() -> Outcome {
    let basis = build_basis(Interval1D, 1.0, 0.3, 1, 30).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for &t in &[0.05, 0.2, 1.0, 3.0] {
        let a = ctrw_survival(&basis, 0.1, t, 1.0, 1.0).map_err(|e| e.to_string())?.value;
        let b = basis.survival(0.1, t).map_err(|e| e.to_string())?.value;
        worst = worst.max((a - b).abs());
    }
    let basis = build_basis(Interval1D, 1.0, 0.0, 1, 30).map_err(|e| e.to_string())?;
    let s = |t: f64| ctrw_survival(&basis, 0.0, t, 0.5, 1.0).map(|v| v.value).map_err(|e| e.to_string());
    let slope = (s(1e4)? / s(1e2)?).ln() / 100f64.ln();
    check(worst < 1e-10 && (slope + 0.5).abs() <= 0.05, format!("alpha = 1 error {worst:.2e}, alpha = 0.5 slope {slope:.4}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("tracer reproduction", tracer),
        ("Brownian limits", brownian_limits),
        ("dual-route weights", dual_weights),
        ("spectral vs Monte Carlo survival", spectral_vs_mc),
        ("special-function dual path", specfun_dual_path),
        ("asymptotics", asymptotics),
        ("moment consistency", moment_consistency),
        ("square-root boundary", sqrt_boundary),
        ("double well", double_well),
        ("Hermite identity", hermite_identity),
        ("CTRW", ctrw),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, msg) = match f() {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("criterion {}: {tag} {name}: {msg} [{:.1} s]", i + 1, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
