import math

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from energyquant import (EmpiricalProxy, check_separated_count, empty_ball_net,
                         equimass_dyadic, equimass_quantile, equimass_striped,
                         make_target, partition_report)


class TestQuantileCells:
    def test_uniform_quarters(self, uniform):
        part = equimass_quantile(uniform, 4)
        assert len(part) == 4
        assert np.allclose(part.masses, 0.25)
        assert np.allclose(part.diameters, 0.25)
        assert np.allclose(part.reps[:, 0], [1 / 8, 3 / 8, 5 / 8, 7 / 8])
        assert part.sum_diam_pow(1.0) == pytest.approx(1.0)

    def test_gap_falls_between_cells(self, two_intervals):
        part = equimass_quantile(two_intervals, 2)
        (c0, c1) = part.cells
        assert (c0.region.lo, c0.region.hi) == (1.0, 2.0)
        assert (c1.region.lo, c1.region.hi) == (6.0, 7.0)
        assert part.reps[:, 0] == pytest.approx([1.5, 6.5])

    def test_cantor_triadic_cells(self, cantor):
        part = equimass_quantile(cantor, 2)
        assert part.cells[0].region.hi == pytest.approx(1 / 3)
        assert part.cells[1].region.lo == pytest.approx(2 / 3)
        beta = cantor.ahlfors.beta
        assert part.sum_diam_pow(beta) == pytest.approx(1.0, abs=1e-9)

    def test_cantor_critical_sum_is_scale_free(self, cantor):
        beta = cantor.ahlfors.beta
        for n in (2, 8, 32):
            part = equimass_quantile(cantor, n)
            assert part.sum_diam_pow(beta) == pytest.approx(1.0, abs=1e-8)

    def test_needs_cdf(self):
        tri = make_target("sierpinski")
        with pytest.raises(ValueError, match="quantile"):
            equimass_quantile(tri, 4)

    def test_bad_n(self, uniform):
        for bad in (0, -3, 2.5):
            with pytest.raises(ValueError, match="positive integer"):
                equimass_quantile(uniform, bad)


class TestStripedBoxes:
    def test_square_sixteen(self, square):
        part = equimass_striped(square, 16)
        assert len(part) == 16
        assert np.allclose(part.masses, 1 / 16)
        assert np.allclose(part.diameters, math.sqrt(2) / 4)
        areas = [np.prod(c.region.high - c.region.low) for c in part.cells]
        assert math.fsum(areas) == pytest.approx(1.0, abs=1e-12)

    def test_non_square_count_tiles_exactly(self, square):
        part = equimass_striped(square, 6)
        areas = [np.prod(c.region.high - c.region.low) for c in part.cells]
        assert math.fsum(areas) == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(part.masses, 1 / 6)
        # reps must sit inside their own box
        for c in part.cells:
            assert np.all(c.rep >= c.region.low) and np.all(c.rep <= c.region.high)

    def test_rejects_targets_without_box_geometry(self, cantor):
        with pytest.raises(ValueError):
            equimass_striped(cantor, 4)


class TestDyadicGrouping:
    def test_exact_grid_alignment(self):
        # 32 x 32 grid midpoints on the unit square, n = 64 cells of 16
        side = np.arange(32) / 32 + 1 / 64
        xx, yy = np.meshgrid(side, side)
        tokens = np.column_stack([xx.ravel(), yy.ravel()])
        part = equimass_dyadic(EmpiricalProxy(tokens), 64, root=(0.0, 1.0))
        assert len(part) == 64
        assert np.allclose(part.masses, 1 / 64)
        # every cell is a 4x4 block of grid midpoints
        expected = math.sqrt(2.0) * (1 / 8 - 1 / 32)
        assert np.allclose(part.diameters, expected)

    def test_cells_partition_tokens(self, rng):
        tokens = rng.random((512, 2))
        part = equimass_dyadic(EmpiricalProxy(tokens), 32)
        seen = np.concatenate([c.region.tokens for c in part.cells])
        assert seen.shape == tokens.shape
        # the grouped tokens are a permutation of the input cloud
        order_a = np.lexsort(seen.T)
        order_b = np.lexsort(tokens.T)
        assert np.array_equal(seen[order_a], tokens[order_b])
        assert all(c.level is not None for c in part.cells)

    def test_rep_inside_cell_bbox(self, rng):
        tokens = rng.random((256, 1))
        part = equimass_dyadic(EmpiricalProxy(tokens), 16)
        for c in part.cells:
            t = c.region.tokens
            assert t.min() - 1e-12 <= c.rep[0] <= t.max() + 1e-12

    def test_indivisible_count_rejected(self, rng):
        tokens = rng.random((100, 1))
        with pytest.raises(ValueError, match="multiple of n"):
            equimass_dyadic(EmpiricalProxy(tokens), 7)

    def test_tokens_outside_root_rejected(self, rng):
        tokens = rng.random((64, 2)) + 5.0
        with pytest.raises(ValueError, match="root cube"):
            equimass_dyadic(EmpiricalProxy(tokens), 8, root=(0.0, 1.0))

    def test_duplicate_tokens_handled(self):
        tokens = np.repeat(np.arange(8.0)[:, None], 16, axis=0)
        part = equimass_dyadic(EmpiricalProxy(tokens), 8)
        assert len(part) == 8
        assert np.allclose(sorted(part.diameters), 0.0)

    def test_critical_sum_slope_flat_for_cantor_proxy(self, cantor_proxy):
        beta = math.log(2) / math.log(3)
        sums = [equimass_dyadic(cantor_proxy, n).sum_diam_pow(beta)
                for n in (16, 64)]
        # bounded above and below, no drift by more than a factor ~2
        assert 0.2 <= sums[0] <= 5.0
        assert 0.5 <= sums[1] / sums[0] <= 2.0


class TestEmptyBallNet:
    def test_uniform_net_certified(self, uniform):
        res = empty_ball_net(uniform, 50, seed=3, sample_size=20_000)
        assert res.certified
        assert res.shortfall == 0
        assert res.requested == 50
        assert len(res.centers) >= 50
        d = cdist(res.centers, res.centers)
        np.fill_diagonal(d, np.inf)
        assert d.min() >= res.radius / 2 - 1e-12

    def test_radius_formula(self, cantor):
        res = empty_ball_net(cantor, 20, seed=1, sample_size=20_000)
        beta, c = cantor.ahlfors.beta, cantor.ahlfors.c_mass
        assert res.radius == pytest.approx((2 * c * 20) ** (-1.0 / beta))

    def test_packing_count_consistent(self, uniform):
        res = empty_ball_net(uniform, 30, seed=5, sample_size=20_000)
        shifted = res.centers - res.centers.mean(axis=0)
        delta = res.radius / 2
        count, bound, ok = check_separated_count(shifted / delta, 1.0, 1.0 / delta)
        assert ok
        assert count == len(res.centers)


class TestSeparatedCount:
    def test_bound_and_validation(self):
        pts = np.arange(10.0)[:, None]
        count, bound, ok = check_separated_count(pts, 1.0, 20.0)
        assert count == 10
        assert bound == pytest.approx(2.0 * 21.0)
        assert ok
        with pytest.raises(ValueError, match="delta"):
            check_separated_count(pts, 5.0, 1.0)
        with pytest.raises(ValueError, match="separated"):
            check_separated_count(np.array([[0.0], [0.1]]), 1.0, 1.0)


class TestReport:
    def test_report_mentions_kind_and_levels(self, rng):
        tokens = rng.random((128, 2))
        part = equimass_dyadic(EmpiricalProxy(tokens), 8)
        text = partition_report(part, q=1.0)
        assert "kind=dyadic" in text
        assert "cells per dyadic level" in text
        assert "mass total=1.000000000000" in text
