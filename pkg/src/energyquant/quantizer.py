"""Estimator facade: learn an N-point summary of a sample.

EnergyQuantizer wraps the pipeline proxy -> equal-mass dyadic partition ->
projected descent behind the usual fit/predict/transform surface, so it
drops into sklearn tooling (grid search, pipelines) unchanged.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .energy import energy_sq_to_target
from .measures import EmpiricalProxy
from .optimize import OptimConfig, minimize_energy
from .partition import equimass_dyadic
from .sampling import stratified_sample
from .validation import check_exponent, subseed

__all__ = ["EnergyQuantizer"]


class EnergyQuantizer(TransformerMixin, BaseEstimator):
    """N-point quantizer under the energy distance with exponent q.

    mode 'optimize' runs projected gradient descent from a stratified start;
    'stratified' draws one point per partition cell; 'midpoint' returns the
    cell representatives.  After fit, points_ holds the atoms and
    energy_sq_ the exact squared energy distance to the (trimmed) training
    sample.

    Parameters mirror OptimConfig where they overlap; random_state seeds
    every stochastic step, so equal inputs give bitwise equal results.
    """

    def __init__(self, n_points=16, q=1.0, mode="optimize", max_iters=500,
                 step=0.5, tol=1e-9, epsilon="auto", restarts=3,
                 budget=10_000, projection="clamp_to_bbox", random_state=0):
        self.n_points = n_points
        self.q = q
        self.mode = mode
        self.max_iters = max_iters
        self.step = step
        self.tol = tol
        self.epsilon = epsilon
        self.restarts = restarts
        self.budget = budget
        self.projection = projection
        self.random_state = random_state

    def _seed(self):
        return 0 if self.random_state is None else int(self.random_state)

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_min_samples=1)
        check_exponent(self.q)
        n = int(self.n_points)
        if n < 1:
            raise ValueError("n_points must be a positive integer")
        if len(X) < n:
            raise ValueError(f"need at least n_points = {n} samples, got {len(X)}")
        keep = len(X) - len(X) % n  # equal-mass cells need M divisible by n
        tokens = X[:keep]
        proxy = EmpiricalProxy(tokens)
        partition = equimass_dyadic(proxy, n)

        if self.mode == "optimize":
            config = OptimConfig(max_iters=self.max_iters, step=self.step,
                                 tol=self.tol, epsilon=self.epsilon,
                                 restarts=self.restarts, budget=self.budget,
                                 projection=self.projection)
            result = minimize_energy(proxy, n, self.q, config, seed=self._seed())
            points = result.points
            self.trace_ = result.trace
            self.converged_ = result.converged
        elif self.mode == "stratified":
            points = stratified_sample(partition, proxy, subseed(self._seed(), 0))
            self.trace_ = np.empty(0)
            self.converged_ = True
        elif self.mode == "midpoint":
            points = partition.reps
            self.trace_ = np.empty(0)
            self.converged_ = True
        else:
            raise ValueError(f"unknown mode {self.mode!r}")

        self.points_ = points
        self.partition_ = partition
        self.energy_sq_ = float(energy_sq_to_target(points, proxy, self.q).value)
        self.n_features_in_ = X.shape[1]
        self.n_samples_used_ = keep
        return self

    def predict(self, X):
        """Index of the nearest learned atom for each row."""
        check_is_fitted(self, "points_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return np.argmin(cdist(X, self.points_), axis=1)

    def transform(self, X):
        """Distances from each row to every learned atom."""
        check_is_fitted(self, "points_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return cdist(X, self.points_)

    def score(self, X, y=None):
        """Negative squared energy distance of the atoms to a fresh sample."""
        check_is_fitted(self, "points_")
        X = check_array(X, dtype=float)
        return -float(energy_sq_to_target(self.points_, EmpiricalProxy(X), self.q).value)
