"""Acceptance gate: nine desk-scale checks, one test per criterion.

Run with -v for the one-line pass/fail record per criterion; every
tolerance is pinned in the assertions of its test.
"""

import math

import numpy as np
import pytest

from energyquant import (EmpiricalProxy, OptimConfig, SignedCombo,
                         check_separated_count, compare_energy_w1,
                         empty_ball_net, energy_gradient, energy_sq,
                         energy_sq_cdf, energy_sq_to_target, equimass_dyadic,
                         expected_energy_sq, minimize_energy, sobolev_norm_sq,
                         surrogate_energy, w1_matching, wp_quantile)


def slope_of(ns, vals):
    return float(np.polyfit(np.log(np.asarray(ns, float)),
                            np.log(np.asarray(vals, float)), 1)[0])


def midpoints(n):
    return ((2 * np.arange(n) + 1) / (2 * n))[:, None]


@pytest.fixture(scope="module")
def square_proxy4k(square):
    return EmpiricalProxy(square.sample(4096, 201), ahlfors=square.ahlfors)


@pytest.fixture(scope="module")
def cantor_proxy8k(cantor):
    return EmpiricalProxy(cantor.sample(8192, 202), ahlfors=cantor.ahlfors)


def test_c1_midpoint_benchmark_exact(uniform):
    """E_1^2(midpoints_N, U[0,1]) = 1/(12 N^2): CDF oracle to 1e-10 rel,
    double-sum evaluator to 1e-9."""
    for n in (4, 16, 64, 256, 1024):
        exact = 1.0 / (12.0 * n * n)
        x = midpoints(n)
        cdf_val = energy_sq_cdf(x, uniform)
        assert abs(cdf_val - exact) <= 1e-10 * exact
        double_sum = energy_sq_to_target(x, uniform, 1.0, method="analytic").value
        assert abs(double_sum - exact) <= 1e-9


def test_c2_iid_identity_and_rate(uniform):
    """iid mean E_1^2 equals 1/(6N) within 3 stderr over 200 reps; fitted
    slope -1.0 +/- 0.1 over N in {16, 64, 256}."""
    sizes, means = (16, 64, 256), []
    for n in sizes:
        st = expected_energy_sq(uniform, n, 1.0, mode="iid", reps=200, seed=20)
        assert abs(st.mean - 1.0 / (6.0 * n)) <= 3.0 * st.stderr
        means.append(st.mean)
    assert abs(slope_of(sizes, means) + 1.0) <= 0.1


def test_c3_stratified_rates(uniform, square, cantor_proxy8k):
    """Stratified means: U[0,1] hits 1/(6 n^2) within 3 stderr with slope
    -2.0 +/- 0.1; striped U[0,1]^2 slope -1.5 +/- 0.15; cantor dyadic-proxy
    slope -2.0 +/- 0.2."""
    sizes = (16, 32, 64, 128)

    means = []
    for n in sizes:
        st = expected_energy_sq(uniform, n, 1.0, mode="stratified",
                                reps=200, seed=30)
        assert abs(st.mean - 1.0 / (6.0 * n * n)) <= 3.0 * st.stderr
        means.append(st.mean)
    assert abs(slope_of(sizes, means) + 2.0) <= 0.1

    means2 = [expected_energy_sq(square, n, 1.0, mode="stratified",
                                 reps=150, seed=31).mean for n in sizes]
    assert abs(slope_of(sizes, means2) + 1.5) <= 0.15

    means3 = [expected_energy_sq(cantor_proxy8k, n, 1.0, mode="stratified",
                                 reps=60, seed=32).mean for n in sizes]
    assert abs(slope_of(sizes, means3) + 2.0) <= 0.2


def test_c4_lower_bound_consistency(uniform, square):
    """Optimized E slope over N in {16..256} is not steeper than the
    theoretical -(1 + q/beta)/2 by more than 0.1 (q = 1)."""
    sizes = (16, 32, 64, 128, 256)
    cfg = OptimConfig(max_iters=500, restarts=2)
    for target, beta in ((uniform, 1.0), (square, 2.0)):
        roots = []
        for n in sizes:
            res = minimize_energy(target, n, 1.0, cfg, seed=1)
            roots.append(math.sqrt(max(float(res.energy_sq.value), 0.0)))
        theory = -0.5 * (1.0 + 1.0 / beta)
        assert slope_of(sizes, roots) >= theory - 0.1


def test_c5_disconnected_obstruction(two_intervals):
    """[1,2] u [6,7] at q = 1.5, odd N: optimized E slope >= -1.1, i.e. the
    connected-support rate -1.25 is not achieved."""
    sizes = (17, 33, 65, 129)
    cfg = OptimConfig(max_iters=500, restarts=2)
    roots = []
    for n in sizes:
        res = minimize_energy(two_intervals, n, 1.5, cfg, seed=2)
        roots.append(math.sqrt(max(float(res.energy_sq.value), 0.0)))
    assert slope_of(sizes, roots) >= -1.0 - 0.1


def test_c6_spectral_identity():
    """S_q / E_q^2 constant over 20 random 2-to-8 atom combos per (d, q),
    CV <= 1%; at d = 1, q = 1 the constant is 2 pi +/- 1%, ratio 2 to pi."""
    for d in (1, 2):
        for q in (0.5, 1.0, 1.5):
            rng = np.random.default_rng(600 + 10 * d + int(10 * q))
            ratios = []
            for _ in range(20):
                k = int(rng.integers(2, 9))
                v = rng.random((k, d)) * 2.0
                w = rng.normal(size=k)
                w -= w.mean()
                w /= np.max(np.abs(w))
                dmat = np.linalg.norm(v[:, None, :] - v[None, :, :], axis=2) ** q
                e2 = -0.5 * float(w @ dmat @ w)
                s = sobolev_norm_sq(SignedCombo(v, w), q).value
                ratios.append(s / e2)
            ratios = np.asarray(ratios)
            cv = ratios.std(ddof=1) / ratios.mean()
            assert cv <= 0.01
            if d == 1 and q == 1.0:
                assert ratios.mean() == pytest.approx(2.0 * math.pi, rel=0.01)
                assert ratios.mean() / math.pi == pytest.approx(2.0, rel=0.01)


def test_c7_w1_domination():
    """E_q^2 <= W_1^q with zero violations at 1e-9 over 1000 random pairs
    per (q, d); Dirac pairs are exact equalities; Hungarian matches the
    monotone coupling within 1e-10 on 100 pairs."""
    rng = np.random.default_rng(700)
    for q in (1.0, 1.5):
        for d in (1, 2):
            violations = 0
            for _ in range(1000):
                n = int(rng.integers(2, 41))
                m = n if d == 2 else int(rng.integers(2, 41))
                x = rng.normal(size=(n, d)) * rng.uniform(0.3, 2.0)
                y = rng.normal(size=(m, d)) + rng.normal(size=d)
                violations += not compare_energy_w1(x, y, q).holds
            assert violations == 0
    for q in (1.0, 1.5):
        res = compare_energy_w1([[0.2]], [[1.7]], q)
        assert res.equality
        assert res.energy_sq == pytest.approx(1.5**q, rel=1e-12)
    for _ in range(100):
        n = int(rng.integers(2, 60))
        x = rng.normal(size=(n, 1))
        y = rng.normal(size=(n, 1)) * 1.3 + 0.4
        hung = w1_matching(x, y)
        mono = wp_quantile(x, y, 1.0).value
        assert abs(hung - mono) <= 1e-10


def test_c8_partition_diameter_laws(square_proxy4k, cantor_proxy8k):
    """Dyadic-proxy sum of diam^q at q = 1: slope 0.5 +/- 0.15 for
    U[0,1]^2, slope 0 +/- 0.15 (bounded) for cantor."""
    sizes = (16, 32, 64, 128, 256)
    s_sq = [equimass_dyadic(square_proxy4k, n, root=(0.0, 1.0)).sum_diam_pow(1.0)
            for n in sizes]
    assert abs(slope_of(sizes, s_sq) - 0.5) <= 0.15
    s_ca = [equimass_dyadic(cantor_proxy8k, n, root=(0.0, 1.0)).sum_diam_pow(1.0)
            for n in sizes]
    assert abs(slope_of(sizes, s_ca)) <= 0.15


def test_c9_property_suites(uniform, square, cantor):
    """Metric axioms, q-homogeneous scaling, translation invariance,
    gradient vs finite differences at 1e-4, empty-ball count >= N, and the
    separated-set counting bound."""
    rng = np.random.default_rng(900)

    # metric axioms
    for _ in range(10):
        x = rng.random((12, 2))
        y = rng.random((9, 2)) * 1.5
        z = rng.random((11, 2)) + 0.3
        assert energy_sq(x, x, 1.0).value == 0.0
        assert energy_sq(x, y, 1.0).value >= -1e-12
        assert energy_sq(x, y, 1.0).value == pytest.approx(
            energy_sq(y, x, 1.0).value, rel=1e-12)
        ez = {key: math.sqrt(max(energy_sq(a, b, 1.0).value, 0.0))
              for key, (a, b) in
              {"xz": (x, z), "xy": (x, y), "yz": (y, z)}.items()}
        assert ez["xz"] <= ez["xy"] + ez["yz"] + 1e-9

    # scaling and translation
    x = rng.random((15, 2))
    y = rng.random((10, 2))
    for q in (0.5, 1.0, 1.5):
        base = energy_sq(x, y, q).value
        assert energy_sq(3 * x, 3 * y, q).value == pytest.approx(
            3.0**q * base, rel=1e-10)
        assert energy_sq(x + 7.5, y + 7.5, q).value == pytest.approx(
            base, rel=1e-10)

    # gradient against central differences, both attraction branches
    def fd(f, p, h=1e-6):
        g = np.zeros_like(p)
        for i in range(p.shape[0]):
            for a in range(p.shape[1]):
                pp, pm = p.copy(), p.copy()
                pp[i, a] += h
                pm[i, a] -= h
                g[i, a] = (f(pp) - f(pm)) / (2 * h)
        return g

    pts = rng.random((5, 1))
    g = energy_gradient(pts, uniform, 1.5)
    ref = fd(lambda z: surrogate_energy(z, uniform, 1.5), pts)
    assert np.max(np.abs(g - ref) / np.maximum(np.abs(ref), 1e-8)) <= 1e-4
    ysamp = cantor.sample(500, 5)
    g2 = energy_gradient(pts, cantor, 1.0, epsilon=1e-4, y_sample=ysamp)
    ref2 = fd(lambda z: surrogate_energy(z, cantor, 1.0, epsilon=1e-4,
                                         y_sample=ysamp), pts)
    assert np.max(np.abs(g2 - ref2) / np.maximum(np.abs(ref2), 1e-8)) <= 1e-4

    # empty-ball nets and the packing bound
    for target in (uniform, cantor):
        net = empty_ball_net(target, 40, seed=9, sample_size=50_000)
        assert net.certified
        assert len(net.centers) >= 40
    scale = 2.0 / net.radius  # rescale so the net is 1-separated
    count, bound, ok = check_separated_count(net.centers * scale, 1.0,
                                             scale * 1.5)
    assert ok and count == len(net.centers)
