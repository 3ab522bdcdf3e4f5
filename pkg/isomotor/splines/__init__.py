"""B-spline and NURBS bases, mapped patches and multipatch geometries"""

from ._basis import BasisEvaluation, BasisFunctionSet, BasisValues, evaluate_basis
from ._knots import KnotVector, insert_knot
from ._multipatch import ExcitationSpec, MagnetSpec, MultiPatchGeometry, PatchRecord, rotation
from ._patch import EDGES, MappingValue, NurbsPatch, edge_points, evaluate_mapping, refine, uniform_refine

__all__ = [
    "KnotVector",
    "insert_knot",
    "BasisFunctionSet",
    "BasisValues",
    "BasisEvaluation",
    "evaluate_basis",
    "NurbsPatch",
    "MappingValue",
    "EDGES",
    "edge_points",
    "evaluate_mapping",
    "refine",
    "uniform_refine",
    "MagnetSpec",
    "ExcitationSpec",
    "PatchRecord",
    "MultiPatchGeometry",
    "rotation",
]
