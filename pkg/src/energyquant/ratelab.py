"""Experiment runners: rate sweeps, optimization curves, spectral checks,
Wasserstein comparisons, and partition statistics.

Each runner takes an ExperimentConfig (parsed from TOML), produces plain
row dicts plus a summary dict, and stays deterministic for a fixed seed
regardless of thread count: work is seeded by (seed, size, replicate)
paths, never by execution order.
"""

from __future__ import annotations

import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .energy import kernel_constant
from .fileio import write_points_csv, write_rows
from .measures import make_target
from .optimize import OptimConfig, minimize_energy
from .sampling import default_partition, expected_energy_sq
from .spectral import QuadSpec, fitted_constant
from .validation import check_exponent, subrng
from .wasserstein import compare_energy_w1

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ConfigError", "ExperimentConfig", "RateFit", "fit_rate",
           "run_rate_sweep", "run_optimize", "run_verify_fourier",
           "run_compare_w1", "run_partition_stats", "write_outputs"]

_SECTIONS = ("experiment", "target", "check", "quadrature", "output")


class ConfigError(ValueError):
    """Invalid or missing experiment configuration."""


@dataclass
class ExperimentConfig:
    experiment: dict = field(default_factory=dict)
    target: dict = field(default_factory=dict)
    check: dict = field(default_factory=dict)
    quadrature: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @classmethod
    def from_toml(cls, path):
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
        unknown = set(data) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        return cls(**{k: data.get(k, {}) for k in _SECTIONS})

    def make_target(self):
        spec = dict(self.target)
        kind = spec.pop("kind", None)
        if kind is None:
            raise ConfigError("[target] section needs a 'kind' key")
        try:
            return make_target(kind, **spec)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad target spec: {exc}") from exc

    def require(self, section, key, default=None):
        value = getattr(self, section).get(key, default)
        if value is None:
            raise ConfigError(f"[{section}] section needs a {key!r} key")
        return value

    def exponent(self):
        q = self.require("experiment", "q", 1.0)
        try:
            return check_exponent(q)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def sizes(self):
        sizes = self.require("experiment", "sizes")
        if (not isinstance(sizes, (list, tuple)) or len(sizes) < 1
                or not all(isinstance(s, int) and s > 0 for s in sizes)):
            raise ConfigError("[experiment] sizes must be a list of positive integers")
        return [int(s) for s in sizes]


@dataclass(frozen=True)
class RateFit:
    """Least-squares slope of log(value) against log(n)."""

    slope: float
    intercept: float
    r_squared: float
    slope_halfwidth: float


def fit_rate(ns, values) -> RateFit:
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(ns) < 4:
        raise ValueError("rate fits need at least 4 sizes")
    if np.any(values <= 0.0):
        raise ValueError("rate fits need positive values")
    lx, ly = np.log(ns), np.log(values)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot <= 1e-30 else 1.0 - ss_res / ss_tot
    dof = len(ns) - 2
    se = math.sqrt(ss_res / dof / float(np.sum((lx - lx.mean()) ** 2)))
    half = float(stats.t.ppf(0.975, dof) * se)
    return RateFit(float(slope), float(intercept), r2, half)


def _theory_slope(mode, q, beta):
    """Expected log-log slope of the mean squared energy distance in N."""
    if mode == "iid":
        return -1.0, "iid variance identity"
    if mode == "stratified":
        return -min(1.0 + q / beta, 2.0), "stratified cell-moment bound"
    if mode == "midpoint":
        return -2.0, "deterministic cell representatives"
    if mode == "optimized":
        return -(1.0 + q / beta), "optimal quantizer rate"
    raise ConfigError(f"unknown mode {mode!r}")


def _beta_of(target, cfg):
    override = cfg.check.get("beta")
    if override is not None:
        return float(override)
    ah = getattr(target, "ahlfors", None)
    if ah is None:
        raise ConfigError("target has no regularity exponent; set [check] beta")
    return float(ah.beta)


def _summary(kind, fit, theory, source, tol, rows):
    passed = abs(fit.slope - theory) <= tol if tol is not None else None
    return {
        "experiment": kind,
        "slope": fit.slope,
        "slope_ci_halfwidth": fit.slope_halfwidth,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "theory_slope": theory,
        "theory_source": source,
        "slope_tol": tol,
        "passed": passed,
        "points": len(rows),
    }


def run_rate_sweep(cfg: ExperimentConfig):
    """Mean squared energy distance against N for one sampling mode."""
    target = cfg.make_target()
    q = cfg.exponent()
    sizes = cfg.sizes()
    mode = cfg.require("experiment", "mode", "iid")
    reps = int(cfg.experiment.get("reps", 100))
    seed = int(cfg.experiment.get("seed", 0))
    threads = int(cfg.experiment.get("threads", 1))
    method = cfg.quadrature.get("method", "auto")
    budget = int(cfg.quadrature.get("budget", 10_000))
    beta = _beta_of(target, cfg)

    def one(n):
        return expected_energy_sq(target, n, q, mode=mode, reps=reps, seed=seed,
                                  method=method, budget=budget)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            stats_by_n = list(pool.map(one, sizes))
    else:
        stats_by_n = [one(n) for n in sizes]

    rows = []
    for n, st in zip(sizes, stats_by_n):
        half = len(st.values) // 2
        drift = 0.0
        if half >= 1 and st.stderr > 0:
            drift = abs(st.values[:half].mean() - st.values[half:].mean()) / st.stderr
        rows.append({
            "n": n, "mean_energy_sq": st.mean, "stderr": st.stderr,
            "reps": len(st.values), "q": q, "beta": beta, "mode": mode,
            "drift": drift,
        })
    fit = fit_rate(sizes, [r["mean_energy_sq"] for r in rows])
    theory, source = _theory_slope(mode, q, beta)
    theory = float(cfg.check.get("theory", theory))
    tol = cfg.check.get("slope_tol", 0.15)
    return rows, _summary("rates", fit, theory, source, tol, rows)


def run_optimize(cfg: ExperimentConfig):
    """Optimized N-point energies against N, plus the final atom cloud."""
    target = cfg.make_target()
    q = cfg.exponent()
    sizes = cfg.sizes()
    seed = int(cfg.experiment.get("seed", 0))
    threads = int(cfg.experiment.get("threads", 1))
    config = OptimConfig(
        max_iters=int(cfg.experiment.get("max_iters", 500)),
        restarts=int(cfg.experiment.get("restarts", 3)),
        budget=int(cfg.quadrature.get("budget", 10_000)),
        projection=cfg.experiment.get("projection", "clamp_to_bbox"),
        epsilon=cfg.experiment.get("epsilon", "auto"),
    )
    beta = _beta_of(target, cfg)

    def one(n):
        return minimize_energy(target, n, q, config, seed=seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, sizes))
    else:
        results = [one(n) for n in sizes]

    rows = [{
        "n": n, "energy_sq": float(res.energy_sq.value),
        "stderr": float(res.energy_sq.stderr), "converged": res.converged,
        "iters": res.n_iters, "q": q, "beta": beta, "mode": "optimized",
    } for n, res in zip(sizes, results)]
    fit = fit_rate(sizes, [r["energy_sq"] for r in rows])
    theory, source = _theory_slope("optimized", q, beta)
    theory = float(cfg.check.get("theory", theory))
    tol = cfg.check.get("slope_tol", 0.2)
    summary = _summary("optimize", fit, theory, source, tol, rows)
    if cfg.check.get("one_sided", False):
        # not-faster-than-theory: flag only slopes steeper than allowed
        summary["passed"] = fit.slope >= theory - tol
    return rows, summary, results[-1].points


def run_verify_fourier(cfg: ExperimentConfig):
    """Fit the spectral-to-energy constant and compare conventions."""
    dims = cfg.experiment.get("dims", [1, 2])
    qs = cfg.experiment.get("qs", [0.5, 1.0, 1.5])
    n_calib = int(cfg.experiment.get("n_calib", 20))
    seed = int(cfg.experiment.get("seed", 12345))
    cv_tol = float(cfg.check.get("cv_tol", 0.01))
    ratio_tol = float(cfg.check.get("ratio_tol", 0.02))
    spec = QuadSpec(rtol=float(cfg.quadrature.get("rtol", 1e-9)))

    rows = []
    for d in dims:
        for q in qs:
            q = check_exponent(q)
            fit = fitted_constant(d, q, n_calib=n_calib, seed=seed, spec=spec)
            closed = kernel_constant(d, q, "closed_form")
            ratio = fit.value / closed
            rows.append({
                "dim": d, "q": q, "fitted": fit.value, "cv": fit.cv,
                "closed_form": closed, "ratio_to_closed_form": ratio,
                "expected_ratio": 2.0 / q,
                "ratio_ok": abs(ratio / (2.0 / q) - 1.0) <= ratio_tol,
                "cv_ok": fit.cv <= cv_tol,
            })
    summary = {
        "experiment": "verify-fourier",
        "combos": len(rows),
        "max_cv": max(r["cv"] for r in rows),
        "passed": all(r["cv_ok"] and r["ratio_ok"] for r in rows),
    }
    return rows, summary


def run_compare_w1(cfg: ExperimentConfig):
    """Random-pair audit of the energy/Wasserstein domination."""
    qs = cfg.experiment.get("qs", [1.0, 1.5])
    dims = cfg.experiment.get("dims", [1, 2])
    pairs = int(cfg.experiment.get("pairs", 100))
    max_points = int(cfg.experiment.get("max_points", 40))
    seed = int(cfg.experiment.get("seed", 0))
    tol = float(cfg.check.get("tol", 1e-9))

    rows, violations, equalities = [], 0, 0
    for q in qs:
        q = check_exponent(q)
        if q < 1.0:
            raise ConfigError("comparison exponents must satisfy q >= 1")
        for d in dims:
            rng = subrng(seed, d, int(round(q * 1000)))
            for k in range(pairs):
                n = int(rng.integers(2, max_points + 1))
                scale = float(rng.uniform(0.3, 3.0))
                x = rng.random((n, d)) * scale
                y = rng.random((n, d))
                c = compare_energy_w1(x, y, q, tol=tol)
                violations += not c.holds
                equalities += c.equality
                rows.append({
                    "q": q, "dim": d, "pair": k, "n": n,
                    "energy_sq": c.energy_sq, "w1_pow_q": c.w1_pow_q,
                    "wq_pow_q": c.wq_pow_q, "holds": c.holds,
                    "equality": c.equality, "route": c.route,
                })
    summary = {
        "experiment": "compare-w1",
        "pairs": len(rows),
        "violations": violations,
        "false_equalities": equalities,
        "passed": violations == 0 and equalities == 0,
    }
    return rows, summary


def run_partition_stats(cfg: ExperimentConfig):
    """Summability of cell diameters for the target's natural partitions."""
    target = cfg.make_target()
    q = cfg.exponent()
    sizes = cfg.sizes()
    beta = _beta_of(target, cfg)

    rows = []
    for n in sizes:
        part = default_partition(target, n)
        if part is None:
            raise ConfigError(f"no partition builder for target kind {target.kind!r}")
        diam = part.diameters
        rows.append({
            "n": n, "sum_diam_q": part.sum_diam_pow(q),
            "max_diam": float(diam.max()), "mean_diam": float(diam.mean()),
            "q": q, "beta": beta, "kind": part.kind,
        })
    fit = fit_rate(sizes, [r["sum_diam_q"] for r in rows])
    theory = float(cfg.check.get("theory", 1.0 - q / beta))
    tol = cfg.check.get("slope_tol", 0.15)
    summary = _summary("partition-stats", fit, theory,
                       "dyadic diameter summability", tol, rows)
    return rows, summary


def _svg_rate_plot(rows, summary, x_key="n", y_key=None):
    """Log-log scatter with the fitted and theoretical slopes, as plain SVG."""
    y_key = y_key or ("mean_energy_sq" if "mean_energy_sq" in rows[0] else
                      "energy_sq" if "energy_sq" in rows[0] else "sum_diam_q")
    xs = np.log10([r[x_key] for r in rows])
    ys = np.log10([r[y_key] for r in rows])
    W, H, pad = 480, 360, 48

    def sx(v):
        lo, hi = xs.min(), xs.max()
        span = (hi - lo) or 1.0
        return pad + (v - lo) / span * (W - 2 * pad)

    def sy(v):
        lo, hi = ys.min(), ys.max()
        span = (hi - lo) or 1.0
        return H - pad - (v - lo) / span * (H - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{pad}" y1="{H - pad}" x2="{W - pad}" y2="{H - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{H - pad}" stroke="black"/>',
    ]
    slope, icept = summary["slope"], summary["intercept"]
    ln10 = math.log(10.0)
    fit_y = [(slope * x * ln10 + icept) / ln10 for x in (xs.min(), xs.max())]
    parts.append(f'<line x1="{sx(xs.min()):.1f}" y1="{sy(fit_y[0]):.1f}" '
                 f'x2="{sx(xs.max()):.1f}" y2="{sy(fit_y[1]):.1f}" '
                 f'stroke="#1f77b4" stroke-width="1.5"/>')
    theory = summary.get("theory_slope")
    if theory is not None:
        ty = [ys[0] + theory * (x - xs[0]) for x in (xs.min(), xs.max())]
        parts.append(f'<line x1="{sx(xs.min()):.1f}" y1="{sy(ty[0]):.1f}" '
                     f'x2="{sx(xs.max()):.1f}" y2="{sy(ty[1]):.1f}" '
                     f'stroke="#d62728" stroke-dasharray="5,4"/>')
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3.5" fill="black"/>')
    for x, r in zip(xs, rows):
        parts.append(f'<text x="{sx(x):.1f}" y="{H - pad + 16}" '
                     f'text-anchor="middle">{r[x_key]}</text>')
    parts.append(f'<text x="{W / 2:.0f}" y="{H - 8}" text-anchor="middle">'
                 f'{x_key} (log scale)</text>')
    parts.append(f'<text x="{pad}" y="{pad - 10}">{y_key} (log scale); '
                 f'fit {slope:.3f}, theory {theory if theory is None else round(theory, 3)}'
                 '</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def write_outputs(rows, summary, out_dir, name, fmt="csv", svg=False, points=None):
    """Persist rows, the one-line summary, and optionally a plot and atoms."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [write_rows(out / f"{name}_rows.{'ndjson' if fmt == 'ndjson' else 'csv'}",
                          rows, fmt=fmt)]
    written.append(write_rows(out / f"{name}_summary.ndjson", [summary], fmt="ndjson"))
    if svg and rows and summary.get("slope") is not None:
        path = out / f"{name}.svg"
        path.write_text(_svg_rate_plot(rows, summary))
        written.append(path)
    if points is not None:
        written.append(write_points_csv(out / f"{name}_points.csv", points))
    return written
