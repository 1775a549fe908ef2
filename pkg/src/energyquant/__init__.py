"""Quantization of probability measures under the energy distance.

The library measures how well an N-point configuration represents a target
measure through the squared energy distance with kernel |x - y|^q,
0 < q < 2, and provides the constructions that achieve (and certify) the
sharp decay rates: equal-mass partitions, stratified sampling, projected
gradient descent, a spectral cross-check of the kernel constant, and exact
Wasserstein comparisons on the line.

Quick start:

    >>> import numpy as np
    >>> from energyquant import EnergyQuantizer
    >>> X = np.random.default_rng(0).random((4096, 2))
    >>> quant = EnergyQuantizer(n_points=32, q=1.0).fit(X)
    >>> quant.points_.shape, quant.energy_sq_  # doctest: +SKIP
    ((32, 2), 3.2e-04)
"""

from .energy import energy_sq, energy_sq_cdf, energy_sq_to_target, kernel_constant
from .measures import (AhlforsParams, CantorMeasure, EmpiricalProxy,
                       SierpinskiGasket, TargetMeasure, TwoIntervals,
                       UniformCircle, UniformCube, UniformInterval, make_target)
from .optimize import OptimConfig, OptimResult, energy_gradient, minimize_energy, surrogate_energy
from .partition import (Partition, check_separated_count, empty_ball_net,
                        equimass_dyadic, equimass_quantile, equimass_striped,
                        partition_report)
from .quantizer import EnergyQuantizer
from .sampling import default_partition, expected_energy_sq, stratified_sample
from .spectral import QuadSpec, SignedCombo, fitted_constant, sobolev_norm_sq
from .validation import Estimate
from .wasserstein import compare_energy_w1, w1_matching, wp_quantile

__version__ = "0.1.0"

__all__ = [
    "AhlforsParams",
    "CantorMeasure",
    "EmpiricalProxy",
    "EnergyQuantizer",
    "Estimate",
    "OptimConfig",
    "OptimResult",
    "Partition",
    "QuadSpec",
    "SierpinskiGasket",
    "SignedCombo",
    "TargetMeasure",
    "TwoIntervals",
    "UniformCircle",
    "UniformCube",
    "UniformInterval",
    "check_separated_count",
    "compare_energy_w1",
    "default_partition",
    "empty_ball_net",
    "energy_gradient",
    "energy_sq",
    "energy_sq_cdf",
    "energy_sq_to_target",
    "equimass_dyadic",
    "equimass_quantile",
    "equimass_striped",
    "expected_energy_sq",
    "fitted_constant",
    "kernel_constant",
    "make_target",
    "minimize_energy",
    "partition_report",
    "sobolev_norm_sq",
    "stratified_sample",
    "surrogate_energy",
    "w1_matching",
    "wp_quantile",
    "__version__",
]
