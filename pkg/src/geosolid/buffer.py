"""Buffer analysis: spatial extension of point, line, face, and body
entities by a distance R.

A buffer is the Minkowski sum of the entity with a ball of radius R.
The ball is discretized as an icosphere whose vertices lie exactly on
the sphere, so every buffer is inscribed in the true one: volumes
under-approximate, all output vertices are within R of the entity, and
surface points are at least R*(1 - sag) away from it.  ``sag(lod)`` is
the icosphere facet sag, available as :func:`ball_sag`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .convex import minkowski_sum_convex, minkowski_sum_general
from .core import Mesh, Point3, Segment3, as_point, triangulate_polygon, validate_mesh
from .errors import InvalidInputError, InvalidMeshError, ParameterError
from .setops import union
from .shapes import icosphere, icosphere_sag


@dataclass(frozen=True)
class BufferParams:
    """Buffer distance R plus the ball discretization level."""

    distance: float
    sphere_lod: int = 3

    def __post_init__(self):
        if not (self.distance > 0):
            raise ParameterError("buffer distance must be positive")
        if not (1 <= int(self.sphere_lod) <= 6):
            raise ParameterError("sphere_lod must be in [1, 6]")


@lru_cache(maxsize=8)
def ball_sag(lod: int) -> float:
    """Relative facet sag of the discretized ball at this level."""
    return icosphere_sag(lod)


def _ball(params: BufferParams, center=(0.0, 0.0, 0.0)) -> Mesh:
    return icosphere(params.sphere_lod, radius=params.distance, center=center)


def buffer_point(p, params: BufferParams) -> Mesh:
    """Ball of radius R about the point (inscribed icosphere)."""
    pt = as_point(p)
    return _ball(params, center=pt.as_tuple())


def buffer_polyline(segments, params: BufferParams) -> Mesh:
    """Union of per-segment capsules (cylinder plus spherical caps).

    ``segments`` is a list of Segment3 (or point pairs); joints are
    rounded, which is what the Minkowski definition prescribes.
    """
    segs = []
    for s in segments:
        if isinstance(s, Segment3):
            segs.append(s)
        else:
            a, b = s
            segs.append(Segment3(as_point(a), as_point(b)))
    if not segs:
        raise InvalidInputError("polyline buffer needs at least one segment")
    ball = _ball(params)
    capsules = []
    for s in segs:
        ends = np.stack([s.a.as_array(), s.b.as_array()])
        capsules.append(minkowski_sum_convex(ends, ball.vertices).to_mesh())
    if len(capsules) == 1:
        return capsules[0]
    return union(capsules)


def buffer_face(polygon, params: BufferParams) -> Mesh:
    """Minkowski sum of a planar polygon with the ball: a plate of
    thickness 2R with rounded rim, built as the union of per-triangle
    convex sums."""
    pts = np.asarray([as_point(p).as_tuple() for p in polygon], dtype=float)
    if len(pts) < 3:
        raise InvalidInputError("face buffer needs a polygon with >= 3 vertices")
    _check_planar(pts)
    tris = triangulate_polygon(pts)
    ball = _ball(params)
    pieces = []
    for (i, j, k) in tris:
        pieces.append(minkowski_sum_convex(pts[[i, j, k]], ball.vertices).to_mesh())
    if len(pieces) == 1:
        return pieces[0]
    return union(pieces)


def buffer_body(m: Mesh, params: BufferParams) -> Mesh:
    """Minkowski sum of a solid body with the ball.

    For the sphere itself this realizes the r + R law: buffering a
    radius-r ball by R yields the radius (r + R) ball (up to the
    inscribed discretization).
    """
    rep = validate_mesh(m, check_self_intersection=False)
    if not rep.ok:
        raise InvalidMeshError("body buffer requires a valid closed solid", report=rep)
    return minkowski_sum_general(m, _ball(params))


def _check_planar(pts: np.ndarray, angular_eps: float = 1e-9):
    from .core import _newell_normal

    n = _newell_normal(pts)
    nn = np.linalg.norm(n)
    if nn == 0:
        raise InvalidInputError("face polygon is degenerate")
    n = n / nn
    d = (pts - pts[0]) @ n
    span = max(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)), 1e-300)
    # planarity within an angular tolerance relative to the polygon span
    if np.max(np.abs(d)) > angular_eps * span + 1e-12 * span:
        raise InvalidInputError("face polygon is not planar within tolerance")
