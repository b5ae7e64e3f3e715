"""ineqlab: Orlicz norms, one-dimensional functional-inequality criteria,
and decay tracking for symmetric diffusion semigroups."""

from ineqlab import criteria, measure, nash, norms, semigroup, young

__all__ = ["young", "measure", "norms", "criteria", "semigroup", "nash"]
__version__ = "0.1.0"
