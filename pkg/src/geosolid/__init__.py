"""geosolid: a 3D spatial-analysis kernel for solid geographic bodies.

Eight analysis families over closed triangle-mesh solids: set operations,
buffer analysis, overlay analysis, convex hulls, convex decomposition,
boundary-representation topology, Minkowski sums, and intersection
detection, plus a batch CLI over standard mesh files.
"""

from .buffer import BufferParams, buffer_body, buffer_face, buffer_point, buffer_polyline
from .convex import (
    ConvexPolytope,
    convex_hull,
    is_convex,
    minkowski_sum_convex,
    minkowski_sum_general,
)
from .core import (
    Mesh,
    Point3,
    Segment3,
    Tolerance,
    Triangle3,
    ValidationReport,
    mesh_area,
    mesh_volume,
    validate_mesh,
)
from .decompose import Decomposition, convex_decompose, split_by_plane, tetrahedralize
from .intersect import (
    AabbTree,
    IntersectionOutcome,
    OutcomeKind,
    build_scene_tree,
    detect_pairs,
    mesh_mesh_curve,
    point_in_body,
    segment_triangle,
    triangle_triangle,
)
from .overlay import Layer, OverlayResult, Stats, overlay, reclassify, region_stats
from .predicates import orient2d, orient3d
from .setops import BooleanKind, difference, meet, symmetric_difference, union
from .topology import RelationGroup, TopologyModel, build_topology, euler_check, relation

__all__ = [
    "AabbTree",
    "BooleanKind",
    "BufferParams",
    "ConvexPolytope",
    "Decomposition",
    "IntersectionOutcome",
    "Layer",
    "Mesh",
    "OutcomeKind",
    "OverlayResult",
    "Point3",
    "RelationGroup",
    "Segment3",
    "Stats",
    "Tolerance",
    "TopologyModel",
    "Triangle3",
    "ValidationReport",
    "buffer_body",
    "buffer_face",
    "buffer_point",
    "buffer_polyline",
    "build_scene_tree",
    "build_topology",
    "convex_decompose",
    "convex_hull",
    "detect_pairs",
    "difference",
    "euler_check",
    "is_convex",
    "meet",
    "mesh_area",
    "mesh_mesh_curve",
    "mesh_volume",
    "minkowski_sum_convex",
    "minkowski_sum_general",
    "orient2d",
    "orient3d",
    "overlay",
    "point_in_body",
    "reclassify",
    "region_stats",
    "relation",
    "segment_triangle",
    "split_by_plane",
    "symmetric_difference",
    "tetrahedralize",
    "triangle_triangle",
    "union",
    "validate_mesh",
]

__version__ = "0.1.0"
