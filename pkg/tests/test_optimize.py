import numpy as np
import pytest

from energyquant import (OptimConfig, energy_gradient, energy_sq_to_target,
                         make_target, minimize_energy, surrogate_energy)


def fd_gradient(f, x, h=1e-6):
    g = np.zeros_like(x)
    for k in range(x.shape[0]):
        for a in range(x.shape[1]):
            xp, xm = x.copy(), x.copy()
            xp[k, a] += h
            xm[k, a] -= h
            g[k, a] = (f(xp) - f(xm)) / (2 * h)
    return g


class TestGradient:
    def test_analytic_branch_matches_fd(self, uniform, rng):
        x = np.sort(rng.random(6))[:, None]
        for q in (0.8, 1.5):
            g = energy_gradient(x, uniform, q)
            ref = fd_gradient(lambda z: surrogate_energy(z, uniform, q), x)
            assert np.allclose(g, ref, rtol=1e-4, atol=1e-7)

    def test_monte_carlo_branch_matches_fd(self, cantor, rng):
        x = rng.random((5, 1))
        y = cantor.sample(400, 21)
        eps = 1e-4
        g = energy_gradient(x, cantor, 1.0, epsilon=eps, y_sample=y)
        ref = fd_gradient(
            lambda z: surrogate_energy(z, cantor, 1.0, epsilon=eps, y_sample=y), x)
        assert np.allclose(g, ref, rtol=1e-4, atol=1e-7)

    def test_2d_analytic_branch(self, square, rng):
        x = rng.random((4, 2))
        g = energy_gradient(x, square, 1.0)
        ref = fd_gradient(lambda z: surrogate_energy(z, square, 1.0), x)
        assert np.allclose(g, ref, rtol=1e-4, atol=1e-6)

    def test_surrogate_is_affine_in_energy(self, uniform, rng):
        # objective = 2 E^2 + E|Y - Y'|^q, exact at epsilon = 0
        x = rng.random((7, 1))
        for q in (0.5, 1.4):
            s = surrogate_energy(x, uniform, q)
            e2 = energy_sq_to_target(x, uniform, q, method="analytic").value
            assert s == pytest.approx(2 * e2 + uniform.pairwise_moment(q).value,
                                      rel=1e-12)

    def test_mc_branch_requires_sample(self, cantor, rng):
        with pytest.raises(ValueError, match="y_sample"):
            surrogate_energy(rng.random((3, 1)), cantor, 1.0)


class TestMinimize:
    def test_uniform_lands_on_midpoints(self, uniform):
        n = 8
        res = minimize_energy(uniform, n, 1.0,
                              OptimConfig(max_iters=400, restarts=2), seed=1)
        mids = (2 * np.arange(n) + 1) / (2 * n)
        assert res.converged
        assert np.max(np.abs(np.sort(res.points[:, 0]) - mids)) < 1e-3
        assert res.energy_sq.value == pytest.approx(1 / (12 * n * n), rel=1e-3)

    def test_scaled_interval_midpoints(self):
        target = make_target("uniform_interval", a=2.0, b=4.0)
        res = minimize_energy(target, 4, 1.0,
                              OptimConfig(max_iters=400, restarts=2), seed=2)
        assert np.allclose(np.sort(res.points[:, 0]), [2.25, 2.75, 3.25, 3.75],
                           atol=1e-3)

    def test_translation_equivariance(self):
        a = make_target("uniform_interval", a=0.0, b=1.0)
        b = make_target("uniform_interval", a=5.0, b=6.0)
        cfg = OptimConfig(max_iters=60, restarts=1)
        ra = minimize_energy(a, 5, 1.0, cfg, seed=3)
        rb = minimize_energy(b, 5, 1.0, cfg, seed=3)
        assert np.allclose(rb.points - 5.0, ra.points, atol=1e-9)

    def test_trace_decreases_to_final(self, uniform):
        res = minimize_energy(uniform, 6, 1.0, OptimConfig(restarts=1), seed=4)
        assert res.trace[-1] <= res.trace[0] + 1e-15
        assert res.trace.min() == pytest.approx(res.trace[-1])
        assert res.n_iters == len(res.trace) - 1

    def test_init_disables_restarts_and_is_deterministic(self, uniform):
        x0 = np.linspace(0.1, 0.9, 5)[:, None]
        r1 = minimize_energy(uniform, 5, 1.0, OptimConfig(max_iters=50), seed=0, init=x0)
        r2 = minimize_energy(uniform, 5, 1.0, OptimConfig(max_iters=50), seed=99, init=x0)
        assert np.array_equal(r1.points, r2.points)
        assert len(r1.restart_energies) == 1
        with pytest.raises(ValueError, match="expected n"):
            minimize_energy(uniform, 4, 1.0, init=x0)

    def test_restart_energies_collected(self, uniform):
        res = minimize_energy(uniform, 4, 1.0,
                              OptimConfig(max_iters=30, restarts=3), seed=5)
        assert len(res.restart_energies) == 3
        assert float(res.energy_sq.value) == pytest.approx(min(res.restart_energies))

    def test_clamp_projection_respects_bbox(self, square):
        res = minimize_energy(square, 9, 1.0,
                              OptimConfig(max_iters=80, restarts=1), seed=6)
        lo, hi = square.bbox
        assert np.all(res.points >= lo - 1e-12)
        assert np.all(res.points <= hi + 1e-12)

    def test_support_projection_on_disconnected_target(self, two_intervals):
        cfg = OptimConfig(max_iters=150, restarts=1, projection="project_1d_support")
        res = minimize_energy(two_intervals, 6, 1.5, cfg, seed=7)
        x = res.points[:, 0]
        inside = ((x >= 1.0 - 1e-9) & (x <= 2.0 + 1e-9)) | \
                 ((x >= 6.0 - 1e-9) & (x <= 7.0 + 1e-9))
        assert inside.all()

    def test_support_projection_needs_1d(self, square):
        cfg = OptimConfig(max_iters=5, restarts=1, projection="project_1d_support")
        with pytest.raises(ValueError, match="one-dimensional"):
            minimize_energy(square, 4, 1.0, cfg, seed=0)

    def test_unknown_projection(self, uniform):
        cfg = OptimConfig(max_iters=5, restarts=1, projection="reflect")
        with pytest.raises(ValueError, match="unknown projection"):
            minimize_energy(uniform, 4, 1.0, cfg, seed=0)

    def test_monte_carlo_path_on_fractal_support(self, cantor):
        cfg = OptimConfig(max_iters=60, restarts=1, budget=2000)
        res = minimize_energy(cantor, 4, 1.0, cfg, seed=8)
        assert res.points.shape == (4, 1)
        assert "monte carlo" in res.notes
        assert 0.0 < float(res.energy_sq.value) < 0.1

    def test_epsilon_validation(self, uniform):
        with pytest.raises(ValueError, match="epsilon"):
            minimize_energy(uniform, 3, 1.0, OptimConfig(epsilon=-1.0), seed=0)
