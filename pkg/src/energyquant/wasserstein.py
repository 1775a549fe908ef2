"""Wasserstein distances and their comparison with the energy distance.

On the line the monotone (quantile) coupling is optimal for every convex
cost, so W_p between an empirical measure and either another empirical
measure or a target with a quantile map reduces to one-dimensional
integrals computed here in closed form.  A combinatorial matching route via
the assignment problem provides an independent check and the d >= 2
empirical case.

The comparison of interest: for q >= 1,

    E_q^2(mu, nu) <= W_1(mu, nu)^q <= W_q(mu, nu)^q ,

with equality on the left exactly for equal measures and for pairs of
Diracs.  For q < 1 the middle term flips against the right one, so callers
get the chain only for q >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment

from .energy import energy_sq, energy_sq_to_target
from .measures import CantorMeasure, TargetMeasure, _cantor_point_moment
from .validation import Estimate, as_points, check_exponent, check_same_dim

__all__ = ["wp_quantile", "w1_matching", "ComparisonResult", "compare_energy_w1"]

_MATCH_CAP = 512
_CANTOR_DEPTH_CAP = 48


def _check_p(p):
    if not np.isfinite(p) or p < 1.0:
        raise ValueError("W_p via the monotone coupling requires p >= 1")
    return float(p)


def _sorted_1d(x, name):
    pts = as_points(x, dim=1, name=name)
    return np.sort(pts[:, 0])


def _signed_pow_antideriv(u, p):
    return math.copysign(abs(u) ** (p + 1.0), u) / (p + 1.0)


def _wp_two_empirical(xs, ys, p):
    n, m = len(xs), len(ys)
    grid = np.union1d(np.arange(1, n) / n, np.arange(1, m) / m)
    t0 = np.concatenate([[0.0], grid])
    t1 = np.concatenate([grid, [1.0]])
    mid = (t0 + t1) / 2.0
    xi = np.minimum((mid * n).astype(int), n - 1)
    yj = np.minimum((mid * m).astype(int), m - 1)
    return float(np.sum((t1 - t0) * np.abs(xs[xi] - ys[yj]) ** p))


def _affine_pieces(target):
    """(t0, t1, x0, x1) rows where the quantile map is affine, or None."""
    kind = getattr(target, "kind", "")
    if kind in ("uniform_interval",) or (kind == "uniform_cube" and target.dim == 1):
        b = target.bbox
        return [(0.0, 1.0, float(b[0, 0]), float(b[1, 0]))]
    if kind == "two_intervals":
        w = target.w1
        return [(0.0, w, target.a1, target.b1), (w, 1.0, target.a2, target.b2)]
    return None


def _wp_vs_affine(xs, pieces, p):
    n = len(xs)
    breaks = sorted({0.0, 1.0, *(i / n for i in range(1, n)),
                     *(t for piece in pieces for t in piece[:2])})
    total = 0.0
    for t0, t1 in zip(breaks[:-1], breaks[1:]):
        if t1 <= t0:
            continue
        tm = (t0 + t1) / 2.0
        c = xs[min(int(tm * n), n - 1)]
        a0, a1, x0, x1 = next(pc for pc in pieces if pc[0] <= tm <= pc[1])
        slope = (x1 - x0) / (a1 - a0)
        u0 = x0 + slope * (t0 - a0) - c
        u1 = x0 + slope * (t1 - a0) - c
        if slope == 0.0:
            total += abs(u0) ** p * (t1 - t0)
        else:
            total += (_signed_pow_antideriv(u1, p) - _signed_pow_antideriv(u0, p)) / slope
    return total


def _wp_vs_cantor(xs, p):
    """integral of |Q_x(t) - Q_cantor(t)|^p dt by dyadic refinement.

    A depth-m dyadic block of quantile levels maps onto one depth-m triadic
    cell of the support, where the target restricted to the cell is a copy
    of itself scaled by 3^-m.  Blocks inside a single atom level-set
    contribute 2^-m 3^-mp E|C - z|^p with z the atom position rescaled into
    the cell, computed exactly; blocks straddling an atom boundary are
    split.  Atom boundaries i/n need not be dyadic, so refinement stops at
    a cap and the leftover blocks are bounded, not dropped.
    """
    n = len(xs)
    total = 0.0
    # cells: (k, B) with quantile block [k, k+1) / 2^m and support cell
    # [B, B+1) / 3^m; exact integers throughout
    cells = [(0, 0)]
    for m in range(_CANTOR_DEPTH_CAP + 1):
        args, weights, straddle = [], [], []
        for k, B in cells:
            i_lo = (k * n) >> m
            i_hi = ((k + 1) * n - 1) >> m
            if i_lo == i_hi:
                z = float(Fraction(xs[i_lo]) * 3 ** m - B - Fraction(1, 2))
                args.append(z)
                weights.append(0.5 ** m * 3.0 ** (-m * p))
            else:
                straddle.append((k, B))
        if args:
            total += float(np.sum(np.asarray(weights)
                                  * _cantor_point_moment(np.asarray(args), p)))
        if not straddle:
            return Estimate(total, 0.0)
        if m == _CANTOR_DEPTH_CAP:
            bound = 0.0
            for k, B in straddle:
                lo = float(B) * 3.0 ** (-m)
                far = max(abs(float(x) - lo) for x in xs) + 3.0 ** (-m)
                bound += 0.5 ** m * far ** p
            return Estimate(total + bound / 2.0, bound / 2.0)
        cells = [(2 * k, 3 * B) for k, B in straddle] \
            + [(2 * k + 1, 3 * B + 2) for k, B in straddle]
    raise AssertionError("unreachable")


def wp_quantile(x, other, p=1.0) -> Estimate:
    """W_p(mu_x, other)^p through the monotone coupling, exact on the line.

    other may be a point array or a one-dimensional target with a quantile
    map.  The value returned is the p-th power W_p^p.
    """
    p = _check_p(p)
    xs = _sorted_1d(x, "x")
    if isinstance(other, TargetMeasure):
        if other.dim != 1 or not other.has_cdf:
            raise NotImplementedError(
                "quantile coupling needs a one-dimensional target with a CDF")
        if isinstance(other, CantorMeasure):
            return _wp_vs_cantor(xs, p)
        pieces = _affine_pieces(other)
        if pieces is None:
            raise NotImplementedError(
                f"no exact quantile route for target kind {other.kind!r}")
        return Estimate(_wp_vs_affine(xs, pieces, p), 0.0)
    ys = _sorted_1d(other, "other")
    return Estimate(_wp_two_empirical(xs, ys, p), 0.0)


def w1_matching(x, y) -> float:
    """W_1 between equal-size empirical measures via optimal assignment."""
    xp = as_points(x, name="x")
    yp = as_points(y, name="y")
    check_same_dim(xp, yp)
    if len(xp) != len(yp):
        raise ValueError("matching route requires equally many points")
    if len(xp) > _MATCH_CAP:
        raise ValueError(f"matching route caps at {_MATCH_CAP} points")
    cost = np.linalg.norm(xp[:, None, :] - yp[None, :, :], axis=2)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


@dataclass(frozen=True)
class ComparisonResult:
    energy_sq: float
    w1: float
    w1_pow_q: float
    wq_pow_q: float | None
    holds: bool
    equality: bool
    route: str


def compare_energy_w1(x, other, q, seed=0, budget=100_000, tol=1e-9) -> ComparisonResult:
    """Check E_q^2 <= W_1^q (q >= 1) on one pair, with W_q^q when available."""
    q = check_exponent(q)
    if q < 1.0:
        raise ValueError("the energy/W_1 domination is stated for q >= 1")
    xp = as_points(x, name="x")
    wq_pow_q = None
    if isinstance(other, TargetMeasure):
        e2 = float(energy_sq_to_target(xp, other, q, budget=budget, seed=seed).value)
        w1 = float(wp_quantile(xp, other, 1.0).value)
        wq_pow_q = float(wp_quantile(xp, other, q).value) if q > 1.0 else w1
        route = "quantile"
    else:
        yp = as_points(other, name="other")
        check_same_dim(xp, yp)
        e2 = float(energy_sq(xp, yp, q).value)
        if xp.shape[1] == 1:
            w1 = float(wp_quantile(xp, yp, 1.0).value)
            wq_pow_q = float(wp_quantile(xp, yp, q).value) if q > 1.0 else w1
            route = "quantile"
        else:
            w1 = w1_matching(xp, yp)
            route = "matching"
    w1q = w1 ** q
    return ComparisonResult(
        energy_sq=e2, w1=w1, w1_pow_q=w1q, wq_pow_q=wq_pow_q,
        holds=e2 <= w1q + tol, equality=abs(e2 - w1q) <= tol, route=route)
