"""Smoke test for the Python bindings. Run after `maturin develop` in crates/python."""
import math

import oufet


def main():
    assert oufet.__version__
    t = oufet.mean_exit_time(1.0)
    assert 0.5 < t < 1.0, t
    assert abs(oufet.mean_exit_time(1e-8) - 0.5) < 1e-6

    p = oufet.splitting_probability(1.0, 0.5, 0.0)
    assert 0.5 < p < 1.0, p

    lam = oufet.eigenvalues(0.0, n_modes=3)
    for n, l in enumerate(lam):
        assert abs(l - ((n + 1) * math.pi / 2) ** 2) < 1e-9, lam

    s = oufet.survival([0.01, 0.5, 2.0], 1.0)
    assert s[0] > s[1] > s[2] > 0.0, s
    assert abs(oufet.mgf(0.0, 1.0) - 1.0) < 1e-12

    assert abs(oufet.kummer_m(1.0, 1.0, 0.5) - math.exp(0.5)) < 1e-14
    assert abs(oufet.parabolic_d(0.0, 1.0) - math.exp(-0.25)) < 1e-14

    sim = oufet.simulate(1.0, n_paths=2000, delta=1e-3, seed=3)
    mean = sum(sim["exit_times"]) / len(sim["exit_times"])
    assert abs(mean - t) < 0.05, (mean, t)
    assert sim == oufet.simulate(1.0, n_paths=2000, delta=1e-3, seed=3)

    try:
        oufet.mean_exit_time(-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative kappa accepted")
    print("ok")


if __name__ == "__main__":
    main()
