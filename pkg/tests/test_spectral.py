import math

import numpy as np
import pytest

from energyquant import (QuadSpec, SignedCombo, fitted_constant,
                         kernel_constant, sobolev_norm_sq)


def pair_combo(x, y):
    return SignedCombo(np.stack([np.atleast_1d(x), np.atleast_1d(y)]),
                       np.array([1.0, -1.0]))


class TestTwoAtomIdentity:
    @pytest.mark.parametrize("dim", [1, 2])
    @pytest.mark.parametrize("q", [0.5, 1.0, 1.5])
    def test_ratio_is_two_over_q_times_closed_form(self, dim, q, rng):
        expect = (2.0 / q) * kernel_constant(dim, q)
        for _ in range(3):
            x, y = rng.random(dim), rng.random(dim) + 1.0
            s = sobolev_norm_sq(pair_combo(x, y), q)
            e2 = np.linalg.norm(x - y) ** q
            assert s.value / e2 == pytest.approx(expect, rel=1e-6)
            assert s.stderr <= 1e-4 * s.value

    def test_tiny_and_huge_separations(self):
        for sep in (1e-3, 0.5, 40.0):
            s = sobolev_norm_sq(pair_combo([0.0], [sep]), 1.0)
            assert s.value == pytest.approx(2.0 * math.pi * sep, rel=1e-6)


class TestBilinearity:
    @pytest.mark.parametrize("dim", [1, 2])
    def test_three_atom_identity(self, dim, rng):
        # S(sum w_j delta_{v_j}) = c * (-1/2) sum_{j,k} w_j w_k |v_j - v_k|^q
        q = 1.3
        c = (2.0 / q) * kernel_constant(dim, q)
        for _ in range(4):
            v = rng.random((3, dim)) * 2.0
            w = rng.normal(size=3)
            w -= w.mean()
            combo = SignedCombo(v, w)
            d = np.linalg.norm(v[:, None, :] - v[None, :, :], axis=2) ** q
            quadratic = -0.5 * float(w @ d @ w)
            s = sobolev_norm_sq(combo, q)
            assert s.value == pytest.approx(c * quadratic, rel=1e-6)

    def test_duplicate_atoms_fold(self):
        a, b = np.array([0.2]), np.array([1.7])
        merged = SignedCombo(np.stack([a, b]), np.array([1.5, -1.5]))
        split = SignedCombo(np.stack([a, a, b]), np.array([1.0, 0.5, -1.5]))
        sm = sobolev_norm_sq(merged, 0.9).value
        ss = sobolev_norm_sq(split, 0.9).value
        assert ss == pytest.approx(sm, rel=1e-10)


class TestInvariances:
    def test_translation_invariance(self, rng):
        v = rng.random((3, 2))
        w = np.array([1.0, -0.4, -0.6])
        base = sobolev_norm_sq(SignedCombo(v, w), 1.0).value
        for shift in ([3.0, -7.0], [100.0, 0.25]):
            moved = sobolev_norm_sq(SignedCombo(v + shift, w), 1.0).value
            assert moved == pytest.approx(base, rel=1e-8)

    def test_scaling_homogeneity(self, rng):
        v = rng.random((3, 1))
        w = np.array([0.5, 0.5, -1.0])
        for q in (0.5, 1.5):
            base = sobolev_norm_sq(SignedCombo(v, w), q).value
            for s in (0.01, 12.0):
                scaled = sobolev_norm_sq(SignedCombo(v * s, w), q).value
                assert scaled == pytest.approx(s**q * base, rel=1e-7)


class TestValidationAndLimits:
    def test_nonzero_mass_rejected(self):
        with pytest.raises(ValueError, match="sum to zero"):
            SignedCombo(np.array([[0.0], [1.0]]), np.array([1.0, -0.9]))

    def test_weight_shape_rejected(self):
        with pytest.raises(ValueError, match="one weight per atom"):
            SignedCombo(np.array([[0.0], [1.0]]), np.array([1.0]))

    def test_d3_not_implemented(self):
        combo = SignedCombo(np.eye(3)[:2], np.array([1.0, -1.0]))
        with pytest.raises(NotImplementedError, match="d <= 2"):
            sobolev_norm_sq(combo, 1.0)

    def test_all_atoms_coincident_gives_zero(self):
        combo = SignedCombo(np.array([[0.4], [0.4]]), np.array([1.0, -1.0]))
        assert sobolev_norm_sq(combo, 1.0).value == pytest.approx(0.0, abs=1e-12)

    def test_cutoff_override_consistent(self):
        combo = pair_combo([0.0], [1.0])
        auto = sobolev_norm_sq(combo, 1.0).value
        forced = sobolev_norm_sq(combo, 1.0, QuadSpec(cutoff=5000.0)).value
        assert forced == pytest.approx(auto, rel=1e-4)


class TestFittedConstant:
    def test_small_calibration_run(self):
        fit = fitted_constant(2, 1.0, n_calib=5)
        assert fit.ratios.shape == (5,)
        assert fit.cv <= 1e-6
        assert fit.value == pytest.approx(2.0 * kernel_constant(2, 1.0), rel=1e-5)

    def test_deterministic_in_seed(self):
        a = fitted_constant(1, 0.5, n_calib=3, seed=7)
        b = fitted_constant(1, 0.5, n_calib=3, seed=7)
        assert np.array_equal(a.ratios, b.ratios)
