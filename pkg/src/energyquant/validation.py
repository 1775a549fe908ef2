"""Input validation helpers and small shared utilities."""

from __future__ import annotations

import numbers
from dataclasses import dataclass

import numpy as np

# Exponents are accepted on the open interval (0, 2) with this safety margin;
# the kernel degenerates at both endpoints.
Q_MARGIN = 1e-6


@dataclass(frozen=True)
class Estimate:
    """A scalar with an attached standard error (0.0 when the value is exact)."""

    value: float
    stderr: float = 0.0

    def __float__(self):
        return float(self.value)


def as_points(x, dim=None, name="points"):
    """Coerce to a float (n, d) array; 1d input is treated as n points in R^1."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2d array of shape (n, d), got ndim={arr.ndim}")
    if arr.shape[0] == 0:
        raise ValueError(f"{name} must contain at least one point")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"{name} has dimension {arr.shape[1]}, expected {dim}")
    return arr


def check_exponent(q, name="q"):
    if not isinstance(q, numbers.Real) or not np.isfinite(float(q)):
        raise ValueError(f"{name} must be a finite real number")
    q = float(q)
    if q < Q_MARGIN or q > 2.0 - Q_MARGIN:
        raise ValueError(f"{name} must lie in the open interval (0, 2), got {q}")
    return q


def check_same_dim(x, y, names=("x", "y")):
    if x.shape[1] != y.shape[1]:
        raise ValueError(
            f"{names[0]} has dimension {x.shape[1]} but {names[1]} has {y.shape[1]}"
        )


def subrng(seed, *path):
    """Deterministic child generator for a master seed and an integer path.

    Children for distinct paths are statistically independent, so callers can
    split work across (rep, cell) counters without coordinating draws.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.default_rng(ss)


def subseed(seed, *path):
    """A derived integer seed for the same (seed, path) tree as subrng."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])
