"""Numerical laboratory for rotationally symmetric translators of curvature flows."""

__version__ = "0.1.0"

from .curvature import (
    CurvatureFunction,
    DegeneracyClass,
    build_family,
    check_homogeneity,
    classify_degeneracy,
    from_key,
    registry_keys,
    zero_ray,
)

__all__ = [
    "CurvatureFunction",
    "DegeneracyClass",
    "build_family",
    "check_homogeneity",
    "classify_degeneracy",
    "from_key",
    "registry_keys",
    "zero_ray",
    "__version__",
]
