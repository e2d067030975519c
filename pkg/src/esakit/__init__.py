"""Numerical potential theory for hitting, polarity and equal-sum questions of stable processes."""

from .errors import ConfigError, NumericEvaluationError
from .kernels import KernelSpec, bessel_kernel, riesz_kernel, stable_resolvent_density, additive_resolvent_density
from .sets import CantorDust, CompactSet, FinitePoints, Product, Segment, Sphere, box_dimension
from .capacity import DiscreteMeasure, capacity_estimate, energy, equilibrium

__version__ = "0.1.0"
