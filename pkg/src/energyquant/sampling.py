"""Stratified sampling from equal-mass partitions and energy-rate sweeps.

stratified_sample draws one point per cell, each cell from its own seed
path, so results do not depend on evaluation order or thread schedule.
expected_energy_sq repeats sampling over independent replicates and
averages the squared energy distance to the target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import energy_sq_to_target
from .partition import (BoxRegion, IntervalRegion, Partition, TokenRegion,
                        equimass_dyadic, equimass_quantile, equimass_striped)
from .validation import check_exponent, subrng, subseed

__all__ = ["default_partition", "stratified_sample", "EnergyStats", "expected_energy_sq"]


def default_partition(target, n) -> Partition | None:
    """The natural equal-mass partition for a target, or None for plain iid."""
    if getattr(target, "kind", "") == "empirical_proxy":
        return equimass_dyadic(target, n)
    if target.has_cdf:
        return equimass_quantile(target, n)
    if hasattr(target, "low") and hasattr(target, "side"):
        return equimass_striped(target, n)
    return None


def _draw_cell(cell, target, rng):
    region = cell.region
    if isinstance(region, IntervalRegion):
        t = rng.uniform(region.t_lo, region.t_hi)
        return np.array([target.quantile(t)])
    if isinstance(region, BoxRegion):
        return rng.uniform(region.low, region.high)
    if isinstance(region, TokenRegion):
        return region.tokens[rng.integers(len(region.tokens))]
    raise TypeError(f"cannot sample region of type {type(region).__name__}")


def stratified_sample(partition: Partition, target, seed) -> np.ndarray:
    """One point per cell; cell i draws from the child generator (seed, i)."""
    return np.stack([
        _draw_cell(cell, target, subrng(seed, i))
        for i, cell in enumerate(partition.cells)
    ])


@dataclass(frozen=True)
class EnergyStats:
    """Replicate mean of the squared energy distance with its standard error."""

    mean: float
    stderr: float
    values: np.ndarray
    n: int
    mode: str


def expected_energy_sq(target, n, q, mode="iid", reps=100, seed=0,
                       partition=None, method="auto", budget=10_000) -> EnergyStats:
    """Average E_q^2(mu_N, target) over replicates of an N-point scheme.

    mode 'iid' draws n independent points, 'stratified' draws one point per
    cell of an equal-mass partition, 'midpoint' evaluates the partition
    representatives once (deterministic, a single replicate).
    """
    q = check_exponent(q)
    if mode in ("stratified", "midpoint") and partition is None:
        partition = default_partition(target, n)
        if partition is None:
            raise ValueError(f"no partition builder for target {type(target).__name__}")
    if partition is not None and len(partition) != n:
        raise ValueError(f"partition has {len(partition)} cells, expected n = {n}")

    if mode == "midpoint":
        est = energy_sq_to_target(partition.reps, target, q, method=method,
                                  budget=budget, seed=subseed(seed, n, 0, 1))
        return EnergyStats(est.value, est.stderr, np.array([est.value]), n, mode)

    vals = np.empty(reps)
    for rep in range(reps):
        base = subseed(seed, n, rep)
        if mode == "iid":
            x = target.sample(n, subrng(base, 0))
        elif mode == "stratified":
            x = stratified_sample(partition, target, base)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        vals[rep] = energy_sq_to_target(x, target, q, method=method,
                                        budget=budget, seed=subseed(base, 1)).value
    stderr = float(vals.std(ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0
    return EnergyStats(float(vals.mean()), stderr, vals, n, mode)
