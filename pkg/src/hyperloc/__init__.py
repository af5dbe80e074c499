"""Localization formulas read as hyperfunctions.

Exact rational cone geometry, a small holomorphic expression grammar,
boundary-value hyperfunctions with numerical evaluation, a contour-based
Fourier transform, Picken hyperfunctions from fixed-point data, and the
based loop group of SU(2).
"""
from .cones import ConvexCone, HalfSpace, PolarizedWeightSet, Weight, intersect_cones, polar_dual, polarize
from .errors import (
    ConeEmpty,
    ContourBlocked,
    ConvergenceError,
    DegenerateWeight,
    DimensionMismatch,
    EvaluationBlocked,
    HyperlocError,
    InternalError,
    NoPeriodicSolution,
    NotIntegrable,
    NotSlowlyIncreasing,
    PoleError,
    ProductUndefined,
    TrivialCase,
    Unsupported,
)
from .expr import GrowthClass, GrowthKind, classify_growth, evaluate, singular_loci
from .fourier import (
    Contour,
    PartitionOfUnity,
    contour_integral_1d,
    contour_integral_nd,
    fourier_transform,
    mixed_partition_2d,
    orthant_partition,
    residue_sum_1d,
)
from .hyperfunction import (
    BoundaryValue,
    BoundaryValueTerm,
    Hyperfunction,
    add,
    boundary_evaluate,
    equality_probe,
    infinite_product,
    product,
)
from .localization import FixedPointDatum, LocalizationProblem, builtin_s2, picken

__version__ = "0.1.0"

__all__ = [
    "BoundaryValue",
    "BoundaryValueTerm",
    "ConeEmpty",
    "Contour",
    "ContourBlocked",
    "ConvergenceError",
    "ConvexCone",
    "DegenerateWeight",
    "DimensionMismatch",
    "EvaluationBlocked",
    "FixedPointDatum",
    "GrowthClass",
    "GrowthKind",
    "HalfSpace",
    "Hyperfunction",
    "HyperlocError",
    "InternalError",
    "LocalizationProblem",
    "NoPeriodicSolution",
    "NotIntegrable",
    "NotSlowlyIncreasing",
    "PartitionOfUnity",
    "PoleError",
    "PolarizedWeightSet",
    "ProductUndefined",
    "TrivialCase",
    "Unsupported",
    "Weight",
    "add",
    "boundary_evaluate",
    "builtin_s2",
    "classify_growth",
    "contour_integral_1d",
    "contour_integral_nd",
    "equality_probe",
    "evaluate",
    "fourier_transform",
    "infinite_product",
    "intersect_cones",
    "mixed_partition_2d",
    "orthant_partition",
    "picken",
    "polar_dual",
    "polarize",
    "product",
    "residue_sum_1d",
    "singular_loci",
]
