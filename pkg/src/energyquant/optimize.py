"""Projected gradient descent for N-point energy quantizers.

The objective is the squared energy distance of the empirical measure of N
free atoms to a fixed target, up to the target's constant self term:

    S(x) = (2/N) sum_i V(x_i) - (1/N^2) sum_{i != j} |x_i - x_j|^q .

V is the exact attraction E|x_i - Y|^q when the target provides it together
with its gradient; otherwise both come from one frozen Monte Carlo sample,
so every line-search evaluation sees the same deterministic objective.  For
q <= 1 the repulsion kernel is smoothed as (|v|^2 + eps^2)^(q/2); the
reported minimum is always re-evaluated on the unsmoothed energy with a
fresh, larger sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .energy import energy_sq_to_target
from .measures import TargetMeasure
from .sampling import default_partition, stratified_sample
from .validation import as_points, check_exponent, subrng, subseed

__all__ = ["OptimConfig", "OptimResult", "surrogate_energy", "energy_gradient",
           "minimize_energy"]

_ARMIJO = 1e-4
_MAX_HALVINGS = 30


@dataclass(frozen=True)
class OptimConfig:
    max_iters: int = 500
    step: float = 0.5
    tol: float = 1e-9
    epsilon: float | str = "auto"
    budget: int = 10_000
    restarts: int = 3
    projection: str = "clamp_to_bbox"
    final_budget_factor: int = 8


@dataclass(frozen=True)
class OptimResult:
    points: np.ndarray
    energy_sq: object
    trace: np.ndarray
    converged: bool
    n_iters: int
    notes: str = ""
    restart_energies: tuple = field(default=())


def _uses_analytic(target, q, y_sample):
    if y_sample is not None:
        return False
    return (target.has_analytic_attraction(q)
            and type(target).attraction_gradient is not TargetMeasure.attraction_gradient)


def _resolve_epsilon(epsilon, target, q):
    if epsilon == "auto":
        return 1e-6 * target.support_diameter() if q <= 1.0 else 0.0
    eps = float(epsilon)
    if eps < 0.0 or not np.isfinite(eps):
        raise ValueError("epsilon must be a finite non-negative number")
    return eps


def _smoothed_pow(d2, q, eps):
    return (d2 + eps * eps) ** (q / 2.0)


def _repulsion_terms(x, q, eps):
    """sum_{i != j} phi_eps and its gradient wrt each atom."""
    diff = x[:, None, :] - x[None, :, :]
    d2 = np.sum(diff * diff, axis=2)
    np.fill_diagonal(d2, np.inf)
    r2 = d2 + eps * eps
    with np.errstate(divide="ignore"):
        val = float(np.sum(np.where(np.isfinite(r2), r2 ** (q / 2.0), 0.0)))
        w = np.where(r2 > 0.0, r2 ** (q / 2.0 - 1.0), 0.0)
    w[~np.isfinite(w)] = 0.0  # coincident atoms at eps = 0: any subgradient works
    grad = q * np.sum(w[:, :, None] * diff, axis=1)
    return val, grad


def surrogate_energy(x, target, q, epsilon=0.0, y_sample=None) -> float:
    """The descent objective: twice the squared energy plus the constant
    self term of the target, so it shares minimizers with the energy."""
    x = as_points(x, dim=target.dim)
    q = check_exponent(q)
    n = len(x)
    if _uses_analytic(target, q, y_sample):
        att = float(np.sum(target.attraction(x, q)))
    else:
        if y_sample is None:
            raise ValueError("target has no analytic attraction; pass y_sample")
        diff = x[:, None, :] - y_sample[None, :, :]
        att = float(np.sum(np.mean(_smoothed_pow(np.sum(diff * diff, axis=2), q, epsilon),
                                   axis=1)))
    rep, _ = _repulsion_terms(x, q, epsilon)
    return (2.0 / n) * att - rep / (n * n)


def energy_gradient(x, target, q, epsilon=0.0, y_sample=None) -> np.ndarray:
    """Exact gradient of surrogate_energy at the same arguments."""
    x = as_points(x, dim=target.dim)
    q = check_exponent(q)
    n = len(x)
    if _uses_analytic(target, q, y_sample):
        att_grad = target.attraction_gradient(x, q)
    else:
        if y_sample is None:
            raise ValueError("target has no analytic attraction; pass y_sample")
        diff = x[:, None, :] - y_sample[None, :, :]
        r2 = np.sum(diff * diff, axis=2) + epsilon * epsilon
        with np.errstate(divide="ignore"):
            w = np.where(r2 > 0.0, r2 ** (q / 2.0 - 1.0), 0.0)
        att_grad = q * np.mean(w[:, :, None] * diff, axis=1)
    _, rep_grad = _repulsion_terms(x, q, epsilon)
    return (2.0 / n) * att_grad - (2.0 / (n * n)) * rep_grad


def _project(x, target, how):
    if how == "none":
        return x
    if how == "clamp_to_bbox":
        b = target.bbox
        return np.clip(x, b[0], b[1])
    if how == "project_1d_support":
        if target.dim != 1:
            raise ValueError("project_1d_support requires a one-dimensional target")
        comps = getattr(target, "_components", None)
        if comps is None:
            b = target.bbox
            return np.clip(x, b[0], b[1])
        out = x.copy()
        ivs = list(comps())
        for k in range(len(out)):
            v = out[k, 0]
            if any(a <= v <= b for a, b in ivs):
                continue
            out[k, 0] = min((c for a, b in ivs for c in (a, b)), key=lambda c: abs(c - v))
        return out
    raise ValueError(f"unknown projection {how!r}")


def _descend(x, target, q, eps, y, config):
    obj = lambda pts: surrogate_energy(pts, target, q, eps, y)
    val = obj(x)
    trace = [val]
    step = config.step
    flat = 0
    it = 0
    for it in range(1, config.max_iters + 1):
        g = energy_gradient(x, target, q, eps, y)
        gnorm2 = float(np.sum(g * g))
        if gnorm2 == 0.0:
            flat = 3
            break
        accepted = False
        for _ in range(_MAX_HALVINGS):
            cand = _project(x - step * g, target, config.projection)
            cand_val = obj(cand)
            if cand_val <= val - _ARMIJO * step * gnorm2 or np.allclose(cand, x):
                accepted = True
                break
            step *= 0.5
        if not accepted or cand_val >= val - config.tol * max(1.0, abs(val)):
            flat += 1
        else:
            flat = 0
        if accepted:
            x, val = cand, cand_val
            trace.append(val)
            step = min(step * 2.0, config.step)
        if flat >= 3:
            break
    return x, np.asarray(trace), flat >= 3, it


def minimize_energy(target, n, q, config: OptimConfig = OptimConfig(), seed=0,
                    init=None, y_sample=None) -> OptimResult:
    """Best-of-restarts projected descent; returns atoms and their energy.

    init, when given, replaces the stratified initialization and restarts
    are disabled so the run is a deterministic function of the arguments.
    """
    q = check_exponent(q)
    if n < 1:
        raise ValueError("n must be a positive integer")
    eps = _resolve_epsilon(config.epsilon, target, q)
    analytic = _uses_analytic(target, q, y_sample)
    restarts = 1 if init is not None else max(1, config.restarts)
    partition = None
    if init is None:
        try:
            partition = default_partition(target, n)
        except ValueError:
            partition = None

    best = None
    finals = []
    for r in range(restarts):
        if init is not None:
            x0 = as_points(init, dim=target.dim).copy()
            if len(x0) != n:
                raise ValueError(f"init has {len(x0)} points, expected n = {n}")
        elif partition is not None:
            x0 = stratified_sample(partition, target, subseed(seed, r, 0))
        else:
            x0 = target.sample(n, subrng(seed, r, 0))
        if analytic:
            y = None
        else:
            y = y_sample if y_sample is not None else target.sample(
                config.budget, subrng(seed, r, 17))
        x, trace, converged, iters = _descend(x0, target, q, eps, y, config)
        est = energy_sq_to_target(
            x, target, q, method="auto",
            budget=config.budget * config.final_budget_factor,
            seed=subseed(seed, r, 99))
        finals.append(float(est.value))
        cand = OptimResult(
            points=x, energy_sq=est, trace=trace, converged=converged,
            n_iters=iters,
            notes=(f"{'analytic' if analytic else 'monte carlo'} attraction, "
                   f"eps={eps:g}, projection={config.projection}"),
        )
        if best is None or float(est.value) < float(best.energy_sq.value):
            best = cand
    return OptimResult(**{**best.__dict__, "restart_energies": tuple(finals)})
