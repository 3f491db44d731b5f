use oufet::mc_oracle::*;
use oufet::mean_exit::{met_interval, splitting_probability};
use oufet::ou_model::{stokes_drag, OUProblem};
use oufet::spectral::{build_basis, SpectralGeometry};

const BOX: Boundary = Boundary::Interval { lo: -1.0, hi: 1.0 };

fn run(delta: f64, n: usize, scheme: Scheme, seed: u64) -> EmpiricalFET {
    let cfg = SimConfig::new(delta, n, 30.0, seed, scheme).unwrap();
    simulate_fet(&Dynamics::scaled_ou(1.0, 0.0, 1), &BOX, 0.0, &cfg).unwrap()
}

#[test]
fn drift_and_stationary_variance() {
    let p = OUProblem::from_physical(1e-6, stokes_drag(1e-6, 1e-3), 300.0, 0.2e-12, 1e-7, 1).unwrap();
    let dy = Dynamics::from_problem(&p);
    let x0 = 1.5e-7;
    let cfg = SimConfig::new(SimConfig::default_delta(&p), 20_000, 10.0 * p.tau_k, 11, Scheme::AR1).unwrap();
    let xs = sample_positions(&dy, x0, &[p.tau_k, 10.0 * p.tau_k], &cfg).unwrap();
    let n = xs[0].len() as f64;

    let mean = xs[0].iter().sum::<f64>() / n;
    let var0 = xs[0].iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let e = (-1f64).exp();
    let expected = x0 * e + p.xhat * (1.0 - e);
    assert!((mean - expected).abs() < 3.0 * (var0 / n).sqrt(), "{mean} vs {expected}");

    let m = xs[1].iter().sum::<f64>() / n;
    let var = xs[1].iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let target = p.diffusion * p.gamma / p.k;
    // sd of a Gaussian sample variance is var sqrt(2/(n-1))
    assert!((var - target).abs() < 3.0 * target * (2.0 / (n - 1.0)).sqrt(), "{var} vs {target}");
}

#[test]
fn mean_exit_time_at_kappa_one() {
    let exact = met_interval(1.0, 0.0, 0.0).unwrap();
    let naive = run(1e-4, 100_000, Scheme::AR1, 2024).mean_exit();
    let bridge = run(1e-4, 100_000, Scheme::AR1BridgeCorrected, 2024).mean_exit();
    assert!(!bridge.lower_bound);
    assert!((bridge.mean - exact).abs() < 3.0 * bridge.std_error, "{} vs {exact} +- {}", bridge.mean, bridge.std_error);
    assert!((bridge.mean - exact).abs() < (naive.mean - exact).abs());
    // discrete checking misses crossings, so the naive scheme overshoots
    assert!(naive.mean > exact);
}

#[test]
fn halving_the_step_reduces_the_naive_bias() {
    let exact = met_interval(1.0, 0.0, 0.0).unwrap();
    let bias: Vec<f64> = [4e-3, 2e-3, 1e-3, 5e-4]
        .iter()
        .map(|&d| run(d, 40_000, Scheme::AR1, 5).mean_exit().mean - exact)
        .collect();
    assert!(bias.iter().all(|&b| b > 0.0), "{bias:?}");
    assert!(bias.windows(2).all(|w| w[1] < w[0]), "{bias:?}");
}

#[test]
fn coarse_bridge_beats_fine_naive() {
    let exact = met_interval(1.0, 0.0, 0.0).unwrap();
    let bridge = run(1e-3, 100_000, Scheme::AR1BridgeCorrected, 99).mean_exit().mean;
    let naive = run(1e-4, 100_000, Scheme::AR1, 99).mean_exit().mean;
    assert!((bridge - exact).abs() < (naive - exact).abs(), "bridge {bridge}, naive {naive}, exact {exact}");
}

#[test]
fn exit_sides_follow_the_splitting_probability() {
    let (kappa, varphi, z0) = (1.0, 0.5, -0.2);
    let cfg = SimConfig::new(1e-3, 40_000, 30.0, 3, Scheme::AR1BridgeCorrected).unwrap();
    let fet = simulate_fet(&Dynamics::scaled_ou(kappa, varphi, 1), &BOX, z0, &cfg).unwrap();
    let (p, se) = fet.side_fraction(ExitSide::Upper);
    let exact = splitting_probability(kappa, varphi, z0).unwrap();
    assert!((p - exact).abs() < 3.0 * se, "{p} +- {se} vs {exact}");
}

#[test]
fn survival_curve_matches_the_spectral_sum() {
    let basis = build_basis(SpectralGeometry::Interval1D, 1.0, 0.9, 1, 30).unwrap();
    let cfg = SimConfig::new(1e-3, 20_000, 30.0, 17, Scheme::AR1BridgeCorrected).unwrap();
    let fet = simulate_fet(&Dynamics::scaled_ou(1.0, 0.9, 1), &BOX, 0.0, &cfg).unwrap();
    let grid: Vec<f64> = (1..=20).map(|i| 0.1 * i as f64).collect();
    let table = empirical_survival(&fet, &grid).unwrap();
    let errs = table.metadata["std_error"].as_array().unwrap();
    for (&(t, s), e) in table.samples.iter().zip(errs) {
        let exact = basis.survival(0.0, t).unwrap().value;
        let e = e.as_f64().unwrap().max(1.0 / fet.n_paths() as f64);
        assert!((s - exact).abs() < 3.0 * e, "t={t}: {s} vs {exact}");
    }
}

#[test]
fn ball_exit_in_three_dimensions() {
    // Brownian motion leaves the unit ball after (1 - r0^2)/(2 d) on average
    let cfg = SimConfig::new(1e-4, 20_000, 10.0, 4, Scheme::AR1BridgeCorrected).unwrap();
    let fet = simulate_fet(&Dynamics::brownian(1.0, 3), &Boundary::Ball { radius: 1.0 }, 0.5, &cfg).unwrap();
    let m = fet.mean_exit();
    let exact = 0.75 / 6.0;
    assert!((m.mean - exact).abs() < 3.0 * m.std_error, "{} vs {exact}", m.mean);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = SimConfig::new(1e-3, 500, 30.0, 8, Scheme::AR1BridgeCorrected).unwrap();
    let dy = Dynamics::scaled_ou(1.0, 0.2, 1);
    let a = simulate_fet(&dy, &BOX, 0.3, &cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| simulate_fet(&dy, &BOX, 0.3, &cfg).unwrap());
    assert_eq!(a, b);
}
