"""Reference measures for quantization experiments.

Every target knows how to sample itself, how much mass a ball carries, and
its mean pairwise distance moment E|X - X'|^q.  Where a closed form or an
exact recursion exists the result is exact (stderr 0); otherwise the value
is a seeded Monte Carlo estimate with a reported standard error.

Each target also declares its scaling data: the exponent beta such that
ball masses scale like r^beta on the support, together with a two-sided
constant, which downstream constructions (empty-ball nets, rate fits) use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .validation import Estimate, as_points, check_exponent, subrng

__all__ = [
    "AhlforsParams",
    "TargetMeasure",
    "UniformInterval",
    "UniformCube",
    "UniformCircle",
    "CantorMeasure",
    "SierpinskiGasket",
    "TwoIntervals",
    "EmpiricalProxy",
    "make_target",
]


@dataclass(frozen=True)
class AhlforsParams:
    """Ball-mass scaling data: c_mass**-1 * r**beta <= mass(B_r(x)) <= c_mass * r**beta.

    The bounds are certified for radii below r0 when r0 is known.
    """

    beta: float
    c_mass: float
    r0: float | None = None


class TargetMeasure:
    """Base class; concrete measures fill in sampling and mass queries."""

    kind: str = "abstract"
    dim: int = 0
    ahlfors: AhlforsParams

    # -- required surface -------------------------------------------------
    def sample(self, n, seed):
        raise NotImplementedError

    def ball_mass(self, center, radius, budget=100_000, seed=0) -> Estimate:
        raise NotImplementedError

    def pairwise_moment(self, q, budget=100_000, seed=0) -> Estimate:
        """E|X - X'|^q for independent draws X, X'."""
        raise NotImplementedError

    @property
    def bbox(self):
        """(2, d) array: componentwise support bounds [low; high]."""
        raise NotImplementedError

    def support_diameter(self) -> float:
        b = self.bbox
        return float(np.linalg.norm(b[1] - b[0]))

    # -- optional capabilities --------------------------------------------
    def cdf(self, x) -> float:
        raise NotImplementedError(f"{self.kind} has no computable CDF")

    def quantile(self, t, side="lower") -> float:
        raise NotImplementedError(f"{self.kind} has no computable quantile function")

    @property
    def has_cdf(self) -> bool:
        return False

    def has_analytic_attraction(self, q) -> bool:
        return False

    def attraction(self, points, q):
        """Exact V(x_i) = E|x_i - Y|^q as an (n,) array, when available."""
        raise NotImplementedError(f"{self.kind} has no analytic attraction")

    def attraction_gradient(self, points, q):
        """Exact gradient of V at each point, (n, d), when available."""
        raise NotImplementedError(f"{self.kind} has no analytic attraction gradient")

    def _check_ball_args(self, center, radius):
        c = as_points(center, name="center")
        if c.shape != (1, self.dim):
            raise ValueError(f"center must be a single point in R^{self.dim}")
        if not np.isfinite(radius) or radius < 0:
            raise ValueError("radius must be a finite nonnegative number")
        return c[0], float(radius)

    def __repr__(self):
        return f"<{type(self).__name__} kind={self.kind} dim={self.dim}>"


# ---------------------------------------------------------------------------
# interval algebra shared by the one dimensional uniform kinds
# ---------------------------------------------------------------------------

def _interval_attraction(x, a, b, q):
    """integral over [a, b] of |x - y|^q dy (not normalized)."""
    qp = q + 1.0
    inside = (x > a) & (x < b)
    left = x <= a
    out = np.empty_like(x)
    out[inside] = ((x[inside] - a) ** qp + (b - x[inside]) ** qp) / qp
    out[left] = ((b - x[left]) ** qp - (a - x[left]) ** qp) / qp
    right = ~(inside | left)
    out[right] = ((x[right] - a) ** qp - (x[right] - b) ** qp) / qp
    return out


def _interval_attraction_grad(x, a, b, q):
    """d/dx of the unnormalized attraction integral over [a, b]."""
    inside = (x > a) & (x < b)
    left = x <= a
    out = np.empty_like(x)
    out[inside] = (x[inside] - a) ** q - (b - x[inside]) ** q
    out[left] = -((b - x[left]) ** q - (a - x[left]) ** q)
    right = ~(inside | left)
    out[right] = (x[right] - a) ** q - (x[right] - b) ** q
    return out


def _interval_pair_integral(a, b, c, d, q):
    """double integral of |x - y|^q over [a, b] x [c, d] (closed form)."""
    def phi(t):
        return abs(t) ** (q + 2.0)

    return (phi(b - c) - phi(a - c) - phi(b - d) + phi(a - d)) / ((q + 1.0) * (q + 2.0))


class UniformInterval(TargetMeasure):
    """Uniform measure on [a, b]."""

    kind = "uniform_interval"
    dim = 1

    def __init__(self, a=0.0, b=1.0):
        a, b = float(a), float(b)
        if not (np.isfinite(a) and np.isfinite(b) and a < b):
            raise ValueError("need finite a < b")
        self.a, self.b = a, b
        L = b - a
        self.length = L
        self.ahlfors = AhlforsParams(beta=1.0, c_mass=max(L, 2.0 / L), r0=L)

    @property
    def bbox(self):
        return np.array([[self.a], [self.b]])

    def sample(self, n, seed):
        rng = subrng(seed) if not isinstance(seed, np.random.Generator) else seed
        return rng.uniform(self.a, self.b, size=(n, 1))

    def ball_mass(self, center, radius, budget=100_000, seed=0):
        c, r = self._check_ball_args(center, radius)
        lo, hi = max(self.a, c[0] - r), min(self.b, c[0] + r)
        return Estimate(max(hi - lo, 0.0) / self.length)

    def pairwise_moment(self, q, budget=100_000, seed=0):
        q = check_exponent(q)
        return Estimate(self.length**q * 2.0 / ((q + 1.0) * (q + 2.0)))

    @property
    def has_cdf(self):
        return True

    def cdf(self, x):
        return float(np.clip((x - self.a) / self.length, 0.0, 1.0))

    def quantile(self, t, side="lower"):
        return self.a + float(t) * self.length

    def has_analytic_attraction(self, q):
        return True

    def attraction(self, points, q):
        x = as_points(points, dim=1)[:, 0]
        q = check_exponent(q)
        return _interval_attraction(x, self.a, self.b, q) / self.length

    def attraction_gradient(self, points, q):
        x = as_points(points, dim=1)[:, 0]
        q = check_exponent(q)
        return (_interval_attraction_grad(x, self.a, self.b, q) / self.length)[:, None]


class TwoIntervals(TargetMeasure):
    """Uniform measure on the union of two disjoint closed intervals."""

    kind = "two_intervals"
    dim = 1

    def __init__(self, a1=1.0, b1=2.0, a2=6.0, b2=7.0):
        vals = [float(v) for v in (a1, b1, a2, b2)]
        if not all(np.isfinite(vals)) or not (vals[0] < vals[1] < vals[2] < vals[3]):
            raise ValueError("need a1 < b1 < a2 < b2")
        self.a1, self.b1, self.a2, self.b2 = vals
        self.len1 = self.b1 - self.a1
        self.len2 = self.b2 - self.a2
        self.total = self.len1 + self.len2
        self.w1 = self.len1 / self.total
        min_len = min(self.len1, self.len2)
        self.ahlfors = AhlforsParams(
            beta=1.0, c_mass=max(self.total, 2.0 / self.total), r0=min_len
        )

    @property
    def bbox(self):
        return np.array([[self.a1], [self.b2]])

    def _components(self):
        return ((self.a1, self.b1), (self.a2, self.b2))

    def sample(self, n, seed):
        rng = subrng(seed) if not isinstance(seed, np.random.Generator) else seed
        u = rng.uniform(0.0, self.total, size=n)
        x = np.where(u < self.len1, self.a1 + u, self.a2 + (u - self.len1))
        return x[:, None]

    def ball_mass(self, center, radius, budget=100_000, seed=0):
        c, r = self._check_ball_args(center, radius)
        covered = 0.0
        for a, b in self._components():
            covered += max(min(b, c[0] + r) - max(a, c[0] - r), 0.0)
        return Estimate(covered / self.total)

    def pairwise_moment(self, q, budget=100_000, seed=0):
        q = check_exponent(q)
        total = 0.0
        for a, b in self._components():
            for c, d in self._components():
                total += _interval_pair_integral(a, b, c, d, q)
        return Estimate(total / self.total**2)

    @property
    def has_cdf(self):
        return True

    def cdf(self, x):
        x = float(x)
        m = min(max(x, self.a1), self.b1) - self.a1
        m += min(max(x, self.a2), self.b2) - self.a2
        return m / self.total

    def quantile(self, t, side="lower"):
        t = float(t)
        if t < self.w1:
            return self.a1 + t * self.total
        if t > self.w1:
            return self.a2 + (t - self.w1) * self.total
        return self.b1 if side == "lower" else self.a2

    def has_analytic_attraction(self, q):
        return True

    def attraction(self, points, q):
        x = as_points(points, dim=1)[:, 0]
        q = check_exponent(q)
        out = np.zeros_like(x)
        for a, b in self._components():
            out += _interval_attraction(x, a, b, q)
        return out / self.total

    def attraction_gradient(self, points, q):
        x = as_points(points, dim=1)[:, 0]
        q = check_exponent(q)
        out = np.zeros_like(x)
        for a, b in self._components():
            out += _interval_attraction_grad(x, a, b, q)
        return (out / self.total)[:, None]


class UniformCube(TargetMeasure):
    """Uniform measure on an axis-aligned cube [low, low + side]^d."""

    kind = "uniform_cube"

    def __init__(self, low=0.0, side=1.0, dim=2):
        dim = int(dim)
        if dim < 1:
            raise ValueError("dim must be >= 1")
        side = float(side)
        if not np.isfinite(side) or side <= 0:
            raise ValueError("side must be positive")
        low = np.broadcast_to(np.asarray(low, dtype=float), (dim,)).copy()
        if not np.all(np.isfinite(low)):
            raise ValueError("low must be finite")
        self.dim = dim
        self.low = low
        self.side = side
        vd = math.pi ** (dim / 2) / math.gamma(dim / 2 + 1)
        self.ahlfors = AhlforsParams(
            beta=float(dim),
            c_mass=max(vd / side**dim, 2.0**dim * side**dim / vd),
            r0=side,
        )

    @property
    def bbox(self):
        return np.stack([self.low, self.low + self.side])

    def sample(self, n, seed):
        rng = subrng(seed) if not isinstance(seed, np.random.Generator) else seed
        return self.low + self.side * rng.random(size=(n, self.dim))

    def ball_mass(self, center, radius, budget=100_000, seed=0):
        c, r = self._check_ball_args(center, radius)
        if r == 0.0:
            return Estimate(0.0)
        if self.dim == 1:
            lo = max(self.low[0], c[0] - r)
            hi = min(self.low[0] + self.side, c[0] + r)
            return Estimate(max(hi - lo, 0.0) / self.side)
        if self.dim == 2:
            return Estimate(*_disc_box_mass(c, r, self.low, self.side))
        rng = subrng(seed, 0)
        pts = self.low + self.side * rng.random(size=(budget, self.dim))
        hits = np.sum(np.sum((pts - c) ** 2, axis=1) <= r * r)
        p = hits / budget
        return Estimate(p, math.sqrt(max(p * (1 - p), 0.0) / budget))

    def pairwise_moment(self, q, budget=100_000, seed=0):
        q = check_exponent(q)
        if self.dim == 1:
            return Estimate(self.side**q * 2.0 / ((q + 1.0) * (q + 2.0)))
        if self.dim == 2 and abs(q - 1.0) < 1e-12:
            return Estimate(self.side * (2.0 + math.sqrt(2.0) + 5.0 * math.asinh(1.0)) / 15.0)
        rng = subrng(seed, 1)
        x = self.low + self.side * rng.random(size=(budget, self.dim))
        y = self.low + self.side * rng.random(size=(budget, self.dim))
        vals = np.linalg.norm(x - y, axis=1) ** q
        return Estimate(vals.mean(), vals.std(ddof=1) / math.sqrt(budget))

    @property
    def has_cdf(self):
        return self.dim == 1

    def cdf(self, x):
        if self.dim != 1:
            raise NotImplementedError("CDF only in dimension 1")
        return float(np.clip((x - self.low[0]) / self.side, 0.0, 1.0))

    def quantile(self, t, side="lower"):
        if self.dim != 1:
            raise NotImplementedError("quantile only in dimension 1")
        return self.low[0] + float(t) * self.side

    def has_analytic_attraction(self, q):
        return self.dim == 1 or (self.dim == 2 and abs(q - 1.0) < 1e-12)

    def attraction(self, points, q):
        q = check_exponent(q)
        if self.dim == 1:
            x = as_points(points, dim=1)[:, 0]
            return _interval_attraction(x, self.low[0], self.low[0] + self.side, q) / self.side
        if self.dim == 2 and abs(q - 1.0) < 1e-12:
            pts = as_points(points, dim=2)
            u = (pts - self.low) / self.side
            return self.side * _square_mean_distance(u[:, 0], u[:, 1])
        raise NotImplementedError("analytic attraction for cubes needs d = 1, or d = 2 with q = 1")

    def attraction_gradient(self, points, q):
        q = check_exponent(q)
        if self.dim == 1:
            x = as_points(points, dim=1)[:, 0]
            a, b = self.low[0], self.low[0] + self.side
            return (_interval_attraction_grad(x, a, b, q) / self.side)[:, None]
        if self.dim == 2 and abs(q - 1.0) < 1e-12:
            pts = as_points(points, dim=2)
            u = (pts - self.low) / self.side
            return _square_mean_distance_grad(u[:, 0], u[:, 1])
        raise NotImplementedError("analytic attraction for cubes needs d = 1, or d = 2 with q = 1")


# closed-form distance integrals over the unit square ------------------------

def _corner_integral(p, r):
    """integral of sqrt(u^2 + v^2) over [0,p] x [0,r], p, r >= 0."""
    if p == 0.0 or r == 0.0:
        return 0.0
    s = math.hypot(p, r)
    return (2.0 * p * r * s + r**3 * math.asinh(p / r) + p**3 * math.asinh(r / p)) / 6.0


def _corner_integral_dp(p, r):
    """d/dp of _corner_integral = integral of sqrt(p^2 + v^2) dv over [0, r]."""
    if r == 0.0:
        return 0.0
    s = math.hypot(p, r)
    if p == 0.0:
        return 0.5 * r * s
    return 0.5 * (r * s + p * p * math.asinh(r / p))


def _signed_corner(p, r):
    sp = -1.0 if p < 0 else 1.0
    sr = -1.0 if r < 0 else 1.0
    return sp * sr * _corner_integral(abs(p), abs(r))


def _signed_corner_dp(p, r):
    sr = -1.0 if r < 0 else 1.0
    return sr * _corner_integral_dp(abs(p), abs(r))


def _square_mean_distance(a, b):
    """mean distance from (a_i, b_i) to a uniform point of the unit square."""
    out = np.empty_like(a)
    for i in range(a.shape[0]):
        out[i] = (
            _signed_corner(a[i], b[i])
            - _signed_corner(a[i] - 1.0, b[i])
            - _signed_corner(a[i], b[i] - 1.0)
            + _signed_corner(a[i] - 1.0, b[i] - 1.0)
        )
    return out


def _square_mean_distance_grad(a, b):
    out = np.empty((a.shape[0], 2))
    for i in range(a.shape[0]):
        out[i, 0] = (
            _signed_corner_dp(a[i], b[i])
            - _signed_corner_dp(a[i] - 1.0, b[i])
            - _signed_corner_dp(a[i], b[i] - 1.0)
            + _signed_corner_dp(a[i] - 1.0, b[i] - 1.0)
        )
        out[i, 1] = (
            _signed_corner_dp(b[i], a[i])
            - _signed_corner_dp(b[i], a[i] - 1.0)
            - _signed_corner_dp(b[i] - 1.0, a[i])
            + _signed_corner_dp(b[i] - 1.0, a[i] - 1.0)
        )
    return out


def _disc_box_mass(c, r, low, side):
    """Area fraction of the disc B_r(c) inside the square, by 1d quadrature
    of the chord length; breakpoints are inserted where the chord meets the
    horizontal edges, so the integrand is piecewise smooth."""
    from scipy.integrate import quad

    x0, x1 = low[0], low[0] + side
    y0, y1 = low[1], low[1] + side
    lo = max(x0, c[0] - r)
    hi = min(x1, c[0] + r)
    if lo >= hi:
        return 0.0, 0.0

    def chord(u):
        w = math.sqrt(max(r * r - (u - c[0]) ** 2, 0.0))
        return max(min(y1, c[1] + w) - max(y0, c[1] - w), 0.0)

    pts = []
    for yy in (y0, y1):
        h = abs(yy - c[1])
        if h < r:
            w = math.sqrt(r * r - h * h)
            for u in (c[0] - w, c[0] + w):
                if lo < u < hi:
                    pts.append(u)
    val, err = quad(chord, lo, hi, points=sorted(pts) or None, limit=200)
    return val / side**2, err / side**2


class UniformCircle(TargetMeasure):
    """Uniform (arc length) measure on a circle of given center and radius."""

    kind = "uniform_circle"
    dim = 2

    def __init__(self, center=(0.0, 0.0), radius=1.0):
        center = np.asarray(center, dtype=float).reshape(2)
        radius = float(radius)
        if not np.all(np.isfinite(center)) or not np.isfinite(radius) or radius <= 0:
            raise ValueError("need finite center and positive radius")
        self.center = center
        self.radius = radius
        self.ahlfors = AhlforsParams(
            beta=1.0,
            c_mass=max(math.pi * radius, 1.0 / (2.0 * radius), 1.001),
            r0=2.0 * radius,
        )

    @property
    def bbox(self):
        r = self.radius
        return np.stack([self.center - r, self.center + r])

    def support_diameter(self):
        return 2.0 * self.radius

    def sample(self, n, seed):
        rng = subrng(seed) if not isinstance(seed, np.random.Generator) else seed
        th = rng.uniform(0.0, 2.0 * math.pi, size=n)
        return self.center + self.radius * np.stack([np.cos(th), np.sin(th)], axis=1)

    def ball_mass(self, center, radius, budget=100_000, seed=0):
        c, r = self._check_ball_args(center, radius)
        # chord geometry: the trace of B_r(x) on the circle is an arc whose
        # half-angle is 2*arcsin(r / (2R)) when x lies on the circle
        d = float(np.linalg.norm(c - self.center))
        if abs(d - self.radius) > 1e-9 * self.radius:
            # off-circle centers: intersect circle with the ball exactly
            R = self.radius
            if d <= 1e-300:
                return Estimate(1.0 if r >= R else 0.0)
            cosv = (d * d + R * R - r * r) / (2.0 * d * R)
            if cosv <= -1.0:
                return Estimate(1.0)
            if cosv >= 1.0:
                return Estimate(0.0)
            return Estimate(math.acos(cosv) / math.pi)
        if r >= 2.0 * self.radius:
            return Estimate(1.0)
        return Estimate(2.0 * math.asin(r / (2.0 * self.radius)) / math.pi)

    def pairwise_moment(self, q, budget=100_000, seed=0):
        q = check_exponent(q)
        rng = subrng(seed, 2)
        th = rng.uniform(0.0, 2.0 * math.pi, size=budget)
        vals = (2.0 * self.radius * np.abs(np.sin(th / 2.0))) ** q
        return Estimate(vals.mean(), vals.std(ddof=1) / math.sqrt(budget))


# ---------------------------------------------------------------------------
# middle-thirds Cantor measure
# ---------------------------------------------------------------------------

# central moments about 1/2 (solved from the self-similarity X = (digit + X')/3)
_CANTOR_M = {2: 1.0 / 8.0, 4: 7.0 / 320.0, 6: 3.203125 / 728.0}
# moments of the difference Z = X - X'
_CANTOR_Z = {
    2: 2 * _CANTOR_M[2],
    4: 2 * _CANTOR_M[4] + 6 * _CANTOR_M[2] ** 2,
    6: 2 * _CANTOR_M[6] + 30 * _CANTOR_M[2] * _CANTOR_M[4],
}
_TAYLOR_CUT = 60.0


def _gen_binom(q, j):
    out = 1.0
    for i in range(j):
        out *= (q - i) / (i + 1.0)
    return out


def _taylor_abs_moment(t, q, mom):
    """E|t - U|^q for |t| beyond the support of the symmetric variable U."""
    at = np.abs(t)
    return at**q * (
        1.0
        + _gen_binom(q, 2) * mom[2] / at**2
        + _gen_binom(q, 4) * mom[4] / at**4
        + _gen_binom(q, 6) * mom[6] / at**6
    )


def _cantor_point_moment(t, q, depth=0):
    """E|t - U|^q, U = Y - 1/2 with Y a Cantor draw; vectorized recursion.

    Splitting Y on its leading ternary digit gives
    E|t - U|^q = 3^-q/2 (E|3t - 1 - U'|^q + E|3t + 1 - U'|^q); arguments grow
    by a factor 3 per level until the closed Taylor branch takes over.
    """
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    far = np.abs(t) >= _TAYLOR_CUT
    if far.any():
        out[far] = _taylor_abs_moment(t[far], q, _CANTOR_M)
    near = ~far
    if near.any():
        if depth > 96:
            out[near] = np.maximum(np.abs(t[near]), 1e-300) ** q
        else:
            tn = t[near]
            c = 3.0 ** (-q) * 0.5
            out[near] = c * (
                _cantor_point_moment(3.0 * tn - 1.0, q, depth + 1)
                + _cantor_point_moment(3.0 * tn + 1.0, q, depth + 1)
            )
    return out


def _cantor_pair_moment_at(t, q, w0, depth=0):
    """E|t - Z|^q, Z = X - X' for independent Cantor draws."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    far = np.abs(t) >= _TAYLOR_CUT
    if far.any():
        out[far] = _taylor_abs_moment(t[far], q, _CANTOR_Z)
    fixed = (~far) & (np.abs(t) < 1e-13)
    if fixed.any():
        out[fixed] = w0
    near = ~(far | fixed)
    if near.any():
        if depth > 96:
            out[near] = np.maximum(np.abs(t[near]), 1e-300) ** q
        else:
            tn = t[near]
            c = 3.0 ** (-q)
            out[near] = c * (
                0.25 * _cantor_pair_moment_at(3.0 * tn - 2.0, q, w0, depth + 1)
                + 0.5 * _cantor_pair_moment_at(3.0 * tn, q, w0, depth + 1)
                + 0.25 * _cantor_pair_moment_at(3.0 * tn + 2.0, q, w0, depth + 1)
            )
    return out


def _cantor_pair_moment(q):
    """E|X - X'|^q via the fixed point of the digit recursion at t = 0."""
    c = 3.0 ** (-q)
    w0 = 0.4
    for _ in range(200):
        w2 = float(_cantor_pair_moment_at(np.array([2.0]), q, w0)[0])
        w0_new = 0.5 * c * w2 / (1.0 - 0.5 * c)
        if abs(w0_new - w0) <= 1e-16 + 1e-15 * abs(w0_new):
            return w0_new
        w0 = w0_new
    return w0


class CantorMeasure(TargetMeasure):
    """The middle-thirds Cantor measure on [0, 1] (fair coin on digits {0, 2})."""

    kind = "cantor"
    dim = 1
    DIGIT_DEPTH = 40

    def __init__(self, depth=DIGIT_DEPTH):
        depth = int(depth)
        if depth < 10 or depth > 64:
            raise ValueError("digit depth must be between 10 and 64")
        self.depth = depth
        self.ahlfors = AhlforsParams(beta=math.log(2) / math.log(3), c_mass=4.0, r0=1.0)
        self._moment_cache = {}

    @property
    def bbox(self):
        return np.array([[0.0], [1.0]])

    def support_diameter(self):
        return 1.0

    def sample(self, n, seed):
        """Exact depth-limited digit sampling.

        The numerator over 3^depth is assembled in integer arithmetic (split
        into two halves so int64 cannot overflow) and rounded to float once,
        keeping every sample within a couple of ulps of a true digit point.
        """
        rng = subrng(seed) if not isinstance(seed, np.random.Generator) else seed
        digits = rng.integers(0, 2, size=(n, self.depth), dtype=np.int64) * 2
        khi = min(20, self.depth)
        pw_hi = 3 ** (khi - 1 - np.arange(khi, dtype=np.int64))
        hi = digits[:, :khi] @ pw_hi  # integer numerator over 3^khi
        x = hi / float(3**khi)
        if self.depth > khi:
            klo = self.depth - khi
            pw_lo = 3 ** (klo - 1 - np.arange(klo, dtype=np.int64))
            lo = digits[:, khi:] @ pw_lo
            x = x + (lo / float(3**klo)) / float(3**khi)
        return x[:, None]

    def ball_mass(self, center, radius, budget=100_000, seed=0):
        c, r = self._check_ball_args(center, radius)
        return Estimate(self.cdf(c[0] + r) - self.cdf(c[0] - r))

    def pairwise_moment(self, q, budget=100_000, seed=0):
        q = check_exponent(q)
        if q not in self._moment_cache:
            self._moment_cache[q] = _cantor_pair_moment(q)
        return Estimate(self._moment_cache[q])

    @property
    def has_cdf(self):
        return True

    def cdf(self, x):
        x = float(x)
        if x <= 0.0:
            return 0.0
        if x >= 1.0:
            return 1.0
        acc, w = 0.0, 1.0
        for _ in range(64):
            x *= 3.0
            if x < 1.0:
                w *= 0.5
            elif x < 2.0:
                return acc + 0.5 * w
            else:
                acc += 0.5 * w
                w *= 0.5
                x -= 2.0
            if x <= 0.0:
                return acc
            if x >= 1.0:
                return acc + w
        return acc

    def quantile(self, t, side="lower"):
        """Generalized inverse of the staircase CDF.

        side='lower' returns inf{x : F(x) >= t}; side='upper' returns
        inf{x : F(x) > t}.  They differ exactly at dyadic t, where F is flat
        across a removed gap.
        """
        if side not in ("lower", "upper"):
            raise ValueError("side must be 'lower' or 'upper'")
        if not isinstance(t, Fraction):
            t = Fraction(float(t))
        if t <= 0:
            return 0.0
        if t >= 1:
            return 1.0
        x, w = 0.0, 1.0 / 3.0
        for _ in range(self.depth):
            t = t * 2
            if side == "lower":
                # non-terminating binary expansion: digit 1 only when t > 1
                if t > 1:
                    x += 2.0 * w
                    t -= 1
            else:
                # terminating expansion: digit 1 as soon as t >= 1
                if t >= 1:
                    x += 2.0 * w
                    t -= 1
                    if t == 0:
                        return x
            w /= 3.0
        return x

    def has_analytic_attraction(self, q):
        return True

    def attraction(self, points, q):
        x = as_points(points, dim=1)[:, 0]
        q = check_exponent(q)
        return _cantor_point_moment(x - 0.5, q)


class SierpinskiGasket(TargetMeasure):
    """The natural self-similar measure on the Sierpinski gasket."""

    kind = "sierpinski"
    dim = 2

    def __init__(self, vertices=None, burn_in=10_000):
        if vertices is None:
            vertices = [(0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3.0) / 2.0)]
        v = np.asarray(vertices, dtype=float)
        if v.shape != (3, 2) or not np.all(np.isfinite(v)):
            raise ValueError("vertices must be three finite points in the plane")
        self.vertices = v
        self.burn_in = int(burn_in)
        self.ahlfors = AhlforsParams(beta=math.log(3) / math.log(2), c_mass=8.0, r0=1.0)

    @property
    def bbox(self):
        return np.stack([self.vertices.min(axis=0), self.vertices.max(axis=0)])

    def support_diameter(self):
        d = 0.0
        for i in range(3):
            for j in range(i + 1, 3):
                d = max(d, float(np.linalg.norm(self.vertices[i] - self.vertices[j])))
        return d

    def sample(self, n, seed):
        """Independent contraction chains per point.

        A chain of length B started anywhere equals a depth-B address word
        read backwards, so the chains are run only to float resolution;
        beyond 64 steps the start point's weight is below one ulp.
        """
        rng = subrng(seed) if not isinstance(seed, np.random.Generator) else seed
        depth = min(self.burn_in, 64)
        x = np.tile(self.vertices.mean(axis=0), (n, 1))
        idx = rng.integers(0, 3, size=(n, depth))
        for k in range(depth):
            x = 0.5 * (x + self.vertices[idx[:, k]])
        return x

    def ball_mass(self, center, radius, budget=100_000, seed=0):
        c, r = self._check_ball_args(center, radius)
        pts = self.sample(budget, subrng(seed, 3))
        p = float(np.mean(np.sum((pts - c) ** 2, axis=1) <= r * r))
        return Estimate(p, math.sqrt(max(p * (1 - p), 0.0) / budget))

    def pairwise_moment(self, q, budget=100_000, seed=0):
        q = check_exponent(q)
        x = self.sample(budget, subrng(seed, 4))
        y = self.sample(budget, subrng(seed, 5))
        vals = np.linalg.norm(x - y, axis=1) ** q
        return Estimate(vals.mean(), vals.std(ddof=1) / math.sqrt(budget))


class EmpiricalProxy(TargetMeasure):
    """Uniform measure over a fixed token cloud standing in for a target.

    Mass queries and moments are exact finite sums over the tokens, and the
    per-exponent self interaction is cached because energy evaluations
    against a fixed proxy reuse it heavily.
    """

    kind = "empirical_proxy"

    def __init__(self, tokens, ahlfors=None):
        tokens = as_points(tokens, name="tokens")
        self.tokens = tokens
        self.dim = tokens.shape[1]
        if ahlfors is None:
            ahlfors = AhlforsParams(beta=float(self.dim), c_mass=2.0)
        self.ahlfors = ahlfors
        self._self_q = {}

    @property
    def m(self):
        return self.tokens.shape[0]

    @property
    def bbox(self):
        return np.stack([self.tokens.min(axis=0), self.tokens.max(axis=0)])

    def sample(self, n, seed):
        rng = subrng(seed) if not isinstance(seed, np.random.Generator) else seed
        return self.tokens[rng.integers(0, self.m, size=n)]

    def ball_mass(self, center, radius, budget=100_000, seed=0):
        c, r = self._check_ball_args(center, radius)
        return Estimate(float(np.mean(np.sum((self.tokens - c) ** 2, axis=1) <= r * r)))

    def pairwise_moment(self, q, budget=100_000, seed=0):
        q = check_exponent(q)
        return Estimate(2.0 * self.self_interaction(q))

    def self_interaction(self, q):
        """(1/(2 M^2)) * sum_{j,k} |t_j - t_k|^q, cached per exponent."""
        q = check_exponent(q)
        if q not in self._self_q:
            from .energy import _pairwise_q_mean

            self._self_q[q] = 0.5 * _pairwise_q_mean(self.tokens, self.tokens, q)
        return self._self_q[q]

    def has_analytic_attraction(self, q):
        return True

    def attraction(self, points, q):
        pts = as_points(points, dim=self.dim)
        q = check_exponent(q)
        from .energy import _pairwise_q_rowmeans

        return _pairwise_q_rowmeans(pts, self.tokens, q)

    def attraction_gradient(self, points, q):
        pts = as_points(points, dim=self.dim)
        q = check_exponent(q)
        diff = pts[:, None, :] - self.tokens[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=2))
        np.maximum(dist, 1e-300, out=dist)
        w = q * dist ** (q - 2.0)
        return np.einsum("nm,nmd->nd", w, diff) / self.m


_KINDS = {
    "uniform_interval": UniformInterval,
    "uniform_cube": UniformCube,
    "uniform_circle": UniformCircle,
    "cantor": CantorMeasure,
    "sierpinski": SierpinskiGasket,
    "two_intervals": TwoIntervals,
}


def make_target(kind, **params):
    """Factory used by config files; empirical proxies can wrap another kind."""
    if kind == "empirical_proxy":
        if "tokens" in params:
            return EmpiricalProxy(params["tokens"], params.get("ahlfors"))
        source_kind = params.pop("source_kind", None)
        if source_kind is None:
            raise ValueError("empirical_proxy needs tokens or a source_kind")
        m = int(params.pop("m"))
        seed = int(params.pop("seed", 0))
        source = make_target(source_kind, **params)
        return EmpiricalProxy(source.sample(m, seed), ahlfors=source.ahlfors)
    try:
        cls = _KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown target kind {kind!r}") from None
    return cls(**params)
