"""Numerical laboratory for shadowing backward orbits in attracting basins of
polynomial maps on C^2.

Points in the plane are plain Python ``complex`` numbers; points in C^2 are
``(z, w)`` tuples of complex numbers.
"""

__version__ = "0.1.0"

from .polycore import Polynomial, RootFindingError, all_roots, derivative_at, evaluate, preimages_of_value
from .dynsys import (
    FixedPointClass,
    FixedPointKind,
    ProductMap,
    SkewMap,
    classify_fixed_point,
    forward_orbit,
    inverse_step,
)

__all__ = [
    "FixedPointClass",
    "FixedPointKind",
    "Polynomial",
    "ProductMap",
    "RootFindingError",
    "SkewMap",
    "all_roots",
    "classify_fixed_point",
    "derivative_at",
    "evaluate",
    "forward_orbit",
    "inverse_step",
    "preimages_of_value",
]
