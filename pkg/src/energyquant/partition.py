"""Equal-mass partitions and covering/separation constructions.

Three partition builders, all producing cells of mass exactly 1/n:

* quantile cells for one-dimensional targets with a quantile map,
* striped boxes for uniform cubes in any dimension,
* dyadic token cells for empirical proxies, grouped in Morton order so
  every cell of g = M/n tokens sits inside a single dyadic cube.

Alongside them, two regularity constructions: a greedy separated net whose
size witnesses the lower ball-mass bound, and the volume-packing count
check for separated sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.spatial.distance import cdist

from .validation import as_points, check_exponent, subrng

__all__ = [
    "IntervalRegion",
    "BoxRegion",
    "TokenRegion",
    "Cell",
    "Partition",
    "equimass_quantile",
    "equimass_striped",
    "equimass_dyadic",
    "EmptyBallResult",
    "empty_ball_net",
    "check_separated_count",
    "partition_report",
]


@dataclass(frozen=True)
class IntervalRegion:
    """A quantile cell: the image of [t_lo, t_hi] under the quantile map.

    lo and hi are the spatial endpoints; for a target with gaps the cell is
    the support inside [lo, hi], and its diameter hi - lo is an upper bound
    used by the summability checks.
    """

    lo: float
    hi: float
    t_lo: float
    t_hi: float

    @property
    def diameter(self):
        return self.hi - self.lo


@dataclass(frozen=True)
class BoxRegion:
    low: np.ndarray
    high: np.ndarray

    @property
    def diameter(self):
        return float(np.linalg.norm(self.high - self.low))


@dataclass(frozen=True)
class TokenRegion:
    """A group of proxy tokens; the cell is the uniform measure on them."""

    tokens: np.ndarray

    @property
    def diameter(self):
        t = self.tokens
        if len(t) == 1:
            return 0.0
        if len(t) <= 8192:
            best = 0.0
            for i in range(0, len(t), 1024):
                best = max(best, float(cdist(t[i:i + 1024], t).max()))
            return best
        # beyond exact reach, report the bounding-box diagonal (an upper
        # bound, which is the quantity the dyadic theory controls anyway)
        return float(np.linalg.norm(t.max(axis=0) - t.min(axis=0)))


@dataclass(frozen=True)
class Cell:
    region: object
    rep: np.ndarray
    mass: float
    level: int | None = None


@dataclass(frozen=True)
class Partition:
    cells: tuple
    kind: str
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.cells)

    @property
    def reps(self):
        return np.stack([c.rep for c in self.cells])

    @property
    def masses(self):
        return np.array([c.mass for c in self.cells])

    @property
    def diameters(self):
        return np.array([c.region.diameter for c in self.cells])

    def sum_diam_pow(self, q):
        q = check_exponent(q)
        return float(np.sum(self.diameters ** q))


def equimass_quantile(target, n) -> Partition:
    """n cells of mass 1/n from the quantile map of a one-dimensional target.

    Cell i covers quantile levels [(i-1)/n, i/n]; its spatial endpoints take
    the upper quantile on the left and the lower on the right, so boundary
    gaps (two_intervals, cantor) fall between cells rather than inside them.
    """
    n = _check_n(n)
    if not target.has_cdf:
        raise ValueError(f"target {type(target).__name__} has no quantile map")
    cells = []
    for i in range(1, n + 1):
        t_lo, t_hi = Fraction(i - 1, n), Fraction(i, n)
        lo = float(target.quantile(float(t_lo), side="upper"))
        hi = float(target.quantile(float(t_hi), side="lower"))
        rep = float(target.quantile(float(Fraction(2 * i - 1, 2 * n)), side="lower"))
        cells.append(Cell(
            region=IntervalRegion(lo, hi, float(t_lo), float(t_hi)),
            rep=np.array([rep]),
            mass=1.0 / n,
        ))
    return Partition(tuple(cells), kind="quantile")


def _split_counts(n, parts):
    base, extra = divmod(n, parts)
    return [base + 1] * extra + [base] * (parts - extra)


def _stripe_box(low, high, n, axis, cells):
    d = len(low)
    if axis == d - 1:
        edges = np.linspace(low[axis], high[axis], n + 1)
        for j in range(n):
            lo, hi = low.copy(), high.copy()
            lo[axis], hi[axis] = edges[j], edges[j + 1]
            cells.append((lo, hi))
        return
    n1 = max(1, round(n ** (1.0 / (d - axis))))
    counts = _split_counts(n, n1)
    # slab widths proportional to their cell counts keep every final cell
    # at mass exactly 1/n
    t = np.concatenate([[0], np.cumsum(counts)]) / n
    for j, cnt in enumerate(counts):
        lo, hi = low.copy(), high.copy()
        span = high[axis] - low[axis]
        lo[axis] = low[axis] + t[j] * span
        hi[axis] = low[axis] + t[j + 1] * span
        _stripe_box(lo, hi, cnt, axis + 1, cells)


def equimass_striped(target, n) -> Partition:
    """n equal-volume boxes tiling a uniform cube, striped axis by axis."""
    n = _check_n(n)
    low = getattr(target, "low", None)
    side = getattr(target, "side", None)
    if low is None or side is None:
        raise ValueError("striped partition requires a uniform cube target")
    low = np.asarray(low, dtype=float)
    high = low + side
    boxes: list = []
    _stripe_box(low.copy(), high.copy(), n, 0, boxes)
    cells = tuple(
        Cell(region=BoxRegion(lo, hi), rep=(lo + hi) / 2.0, mass=1.0 / n)
        for lo, hi in boxes
    )
    return Partition(cells, kind="striped")


def _morton_codes(tokens, low, side, bits):
    d = tokens.shape[1]
    u = np.clip((tokens - low) / side, 0.0, np.nextafter(1.0, 0.0))
    grid = np.minimum((u * (1 << bits)).astype(np.uint64), (1 << bits) - 1)
    codes = np.zeros(len(tokens), dtype=np.uint64)
    for b in range(bits):
        for a in range(d):
            bit = (grid[:, a] >> np.uint64(b)) & np.uint64(1)
            codes |= bit << np.uint64(b * d + (d - 1 - a))
    return codes


def equimass_dyadic(proxy, n, root=None) -> Partition:
    """Group the M tokens of an empirical proxy into n cells of g = M/n.

    Tokens are sorted once along a Morton curve over a dyadic root cube.
    Each node of the dyadic tree hands unglued tokens up as a residue tail;
    a parent concatenates its children's residues (still in Morton order),
    cuts full groups of g, and passes the remainder on.  Every cut group
    lies inside the cutting node's cube, and the root residue is empty, so
    the result is exactly n cells of mass 1/n whose diameters inherit the
    dyadic geometry of the token set.

    root, if given, is a (low, side) pair fixing the cube; by default a
    slightly inflated bounding box is used.
    """
    tokens = proxy.tokens if hasattr(proxy, "tokens") else as_points(proxy, name="tokens")
    n = _check_n(n)
    M, d = tokens.shape
    if M % n != 0:
        raise ValueError(f"token count {M} must be a multiple of n = {n}")
    g = M // n
    if root is not None:
        low, side = root
        low = np.broadcast_to(np.asarray(low, dtype=float), (d,)).copy()
        side = float(side)
    else:
        low = tokens.min(axis=0)
        side = float(max(tokens.max(axis=0) - low)) or 1.0
        side *= 1.0 + 1e-9
    if np.any(tokens < low) or np.any(tokens > low + side):
        raise ValueError("tokens fall outside the root cube")

    bits = min(21, 62 // d)
    codes = _morton_codes(tokens, low, side, bits)
    order = np.argsort(codes, kind="stable")
    codes = codes[order]

    cells: list[tuple[int, np.ndarray]] = []

    def walk(lo, hi, level):
        """Return the residue (ascending positions into the sorted order)."""
        if hi - lo < g:
            return np.arange(lo, hi)
        if level == bits:
            m = (hi - lo) // g
            for j in range(m):
                cells.append((level, np.arange(lo + j * g, lo + (j + 1) * g)))
            return np.arange(lo + m * g, hi)
        shift = np.uint64(d * (bits - level - 1))
        child = codes[lo:hi] >> shift
        starts = lo + np.unique(child, return_index=True)[1]
        bounds = np.append(np.sort(starts), hi)
        residues = [walk(a, b, level + 1) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        pool = np.concatenate(residues) if residues else np.empty(0, dtype=int)
        m = len(pool) // g
        for j in range(m):
            cells.append((level, pool[j * g:(j + 1) * g]))
        return pool[m * g:]

    leftover = walk(0, M, 0)
    if len(leftover):
        raise AssertionError("dyadic grouping left a nonempty root residue")

    built = []
    for level, pos in cells:
        pts = tokens[order[pos]]
        built.append(Cell(
            region=TokenRegion(pts),
            rep=pts.mean(axis=0),
            mass=1.0 / n,
            level=level,
        ))
    return Partition(tuple(built), kind="dyadic",
                     meta={"root_low": low, "root_side": side, "group_size": g})


@dataclass(frozen=True)
class EmptyBallResult:
    """A separated family of support points witnessing ball-mass bounds."""

    centers: np.ndarray
    radius: float
    requested: int
    shortfall: int
    certified: bool


def empty_ball_net(target, n_points, seed=0, sample_size=100_000) -> EmptyBallResult:
    """Greedy maximal (r/2)-separated net of the support, r = (2 c N)^(-1/beta).

    The upper mass bound makes each radius-r/2 ball hold at most
    c (r/2)^beta = 2^(-beta) / (2 N) of the mass, and a maximal net covers
    the support, so at least 2 N such centers must exist; a shortfall
    flags sampling noise or a regularity claim that fails at this scale.
    """
    ah = target.ahlfors
    n_points = _check_n(n_points)
    r = (2.0 * ah.c_mass * n_points) ** (-1.0 / ah.beta)
    sep = r / 2.0
    pts = target.sample(sample_size, subrng(seed, 7))
    rng = subrng(seed, 11)
    pts = pts[rng.permutation(len(pts))]

    inv = 1.0 / sep
    grid: dict[tuple, list[int]] = {}
    kept: list[int] = []
    keys = np.floor(pts * inv).astype(np.int64)
    d = pts.shape[1]
    offsets = np.stack(np.meshgrid(*([[-1, 0, 1]] * d), indexing="ij"), -1).reshape(-1, d)
    for i in range(len(pts)):
        k = keys[i]
        ok = True
        for off in offsets:
            for j in grid.get(tuple(k + off), ()):
                if np.linalg.norm(pts[i] - pts[j]) < sep:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            grid.setdefault(tuple(k), []).append(i)
            kept.append(i)
    centers = pts[kept]
    shortfall = max(0, n_points - len(centers))
    certified = shortfall == 0 and (ah.r0 is None or sep <= ah.r0)
    return EmptyBallResult(centers, r, n_points, shortfall, certified)


def check_separated_count(points, delta, radius):
    """Volume-packing bound for delta-separated sets in a centered ball.

    Returns (count, bound, passed) where count is the number of points with
    |y| <= radius and bound = 2^d (radius/delta + 1)^d.  delta must lie in
    (0, 4] and the points must actually be delta-separated.
    """
    pts = as_points(points, name="points")
    if not 0.0 < delta <= 4.0:
        raise ValueError("delta must lie in (0, 4]")
    if len(pts) > 1:
        dist = cdist(pts, pts)
        np.fill_diagonal(dist, np.inf)
        if dist.min() < delta:
            raise ValueError("points are not delta-separated")
    d = pts.shape[1]
    count = int(np.sum(np.linalg.norm(pts, axis=1) <= radius))
    bound = (2.0 ** d) * (radius / delta + 1.0) ** d
    return count, bound, count <= bound


def partition_report(partition: Partition, q=1.0) -> str:
    """Human-readable summary of cell masses and diameters."""
    q = check_exponent(q)
    diam = partition.diameters
    lines = [
        f"partition kind={partition.kind} cells={len(partition)}",
        f"mass total={partition.masses.sum():.12f}",
        f"diameter min={diam.min():.6g} mean={diam.mean():.6g} max={diam.max():.6g}",
        f"sum diam^q (q={q:g}) = {partition.sum_diam_pow(q):.6g}",
    ]
    levels = [c.level for c in partition.cells if c.level is not None]
    if levels:
        uniq, cnt = np.unique(levels, return_counts=True)
        lines.append("cells per dyadic level: "
                     + ", ".join(f"{u}:{c}" for u, c in zip(uniq, cnt)))
    return "\n".join(lines)


def _check_n(n):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError("n must be a positive integer")
    return int(n)
