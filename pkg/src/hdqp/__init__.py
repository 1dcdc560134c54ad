"""Quadratic programs with estimated parameters in high dimension.

Closed-form equality-constrained solutions, random-matrix predictions of
the bias of plug-in solutions, bias-corrected estimators and a Monte Carlo
harness to check them.
"""

from .qp_core import ProblemSpec, OptimalSolution, solve_eqc, efficient_frontier
from .datagen import LambdaLaw, SampleSet
from .spectral import WeightDistribution, LimitScaling, solve_limit_scaling
from .estimators import CorrectionReport, correct_sample

__version__ = "0.1.0"
