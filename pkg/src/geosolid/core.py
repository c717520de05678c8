"""Geometric primitives, the tolerance policy, and the solid-mesh data model.

Bodies are closed, outward-oriented triangle 2-manifolds.  Polygonal
faces are triangulated on ingest; degenerate (zero-area) triangles are
dropped with a warning rather than rejected.  All types are immutable
after construction and every operation in the package is a pure
function, so values can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidInputError, InvalidMeshError
from .predicates import orient2d, orient3d_points

DEFAULT_RELATIVE_EPS = 1e-9


@dataclass(frozen=True)
class Tolerance:
    """Global geometric tolerance: absolute length eps plus an angular eps.

    The package default ties ``eps`` to the scene diameter
    (``DEFAULT_RELATIVE_EPS`` times it); use :meth:`for_diameter` or pass
    an explicit instance to pin it.
    """

    eps: float = 1e-9
    angular_eps: float = 1e-9

    def __post_init__(self):
        if not (self.eps > 0 and self.angular_eps > 0):
            raise InvalidInputError("tolerances must be positive")

    @classmethod
    def for_diameter(cls, diameter: float, angular_eps: float = 1e-9) -> "Tolerance":
        d = float(diameter) if diameter > 0 else 1.0
        return cls(eps=DEFAULT_RELATIVE_EPS * d, angular_eps=angular_eps)


def tolerance_for(*objs, tol: Tolerance | None = None) -> Tolerance:
    """Resolve an effective tolerance: explicit wins, else scene-diameter based."""
    if tol is not None:
        return tol
    lo = np.full(3, np.inf)
    hi = np.full(3, -np.inf)
    seen = False
    for obj in objs:
        pts = _coords_of(obj)
        if pts is None or len(pts) == 0:
            continue
        seen = True
        lo = np.minimum(lo, pts.min(axis=0))
        hi = np.maximum(hi, pts.max(axis=0))
    if not seen:
        return Tolerance()
    return Tolerance.for_diameter(float(np.linalg.norm(hi - lo)))


def _coords_of(obj):
    if obj is None:
        return None
    if isinstance(obj, Mesh):
        return obj.vertices
    if isinstance(obj, Point3):
        return obj.as_array()[None, :]
    if isinstance(obj, Segment3):
        return np.stack([obj.a.as_array(), obj.b.as_array()])
    if isinstance(obj, Triangle3):
        return np.stack([obj.p.as_array(), obj.q.as_array(), obj.r.as_array()])
    arr = np.asarray(obj, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr.reshape(-1, 3)


def _check_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{what} contains non-finite coordinates")


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for c in (self.x, self.y, self.z):
            if not math.isfinite(c):
                raise InvalidInputError("point coordinate is not finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def as_tuple(self):
        return (self.x, self.y, self.z)

    def translated(self, v) -> "Point3":
        v = np.asarray(v, dtype=float)
        return Point3(self.x + v[0], self.y + v[1], self.z + v[2])


def as_point(p) -> Point3:
    if isinstance(p, Point3):
        return p
    arr = np.asarray(p, dtype=float).reshape(3)
    return Point3(float(arr[0]), float(arr[1]), float(arr[2]))


@dataclass(frozen=True)
class Segment3:
    a: Point3
    b: Point3

    def __post_init__(self):
        object.__setattr__(self, "a", as_point(self.a))
        object.__setattr__(self, "b", as_point(self.b))
        if self.a.as_tuple() == self.b.as_tuple():
            raise InvalidInputError("segment endpoints coincide")

    def length(self) -> float:
        return float(np.linalg.norm(self.b.as_array() - self.a.as_array()))


@dataclass(frozen=True)
class Triangle3:
    p: Point3
    q: Point3
    r: Point3

    def __post_init__(self):
        object.__setattr__(self, "p", as_point(self.p))
        object.__setattr__(self, "q", as_point(self.q))
        object.__setattr__(self, "r", as_point(self.r))

    def as_array(self) -> np.ndarray:
        return np.stack([self.p.as_array(), self.q.as_array(), self.r.as_array()])

    def area(self) -> float:
        a = self.as_array()
        return 0.5 * float(np.linalg.norm(np.cross(a[1] - a[0], a[2] - a[0])))

    def normal(self) -> np.ndarray:
        a = self.as_array()
        return np.cross(a[1] - a[0], a[2] - a[0])


class Mesh:
    """Closed, oriented triangle boundary representation of a solid body.

    ``vertices`` is an (n, 3) float array, ``triangles`` an (m, 3) int
    array of vertex indices wound so that normals point outward.  The
    empty mesh (no vertices, no triangles) is the explicit representation
    of the empty solid.  Arrays are frozen after construction.
    """

    __slots__ = ("vertices", "triangles")

    def __init__(self, vertices, triangles):
        v = np.array(vertices, dtype=float).reshape(-1, 3)
        t = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        _check_finite(v, "mesh vertex array")
        if len(t) and (t.min() < 0 or t.max() >= len(v)):
            raise InvalidMeshError("triangle index out of range")
        if len(t) and np.any(
            (t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])
        ):
            raise InvalidMeshError("triangle repeats a vertex index")
        v.setflags(write=False)
        t.setflags(write=False)
        self.vertices = v
        self.triangles = t

    @classmethod
    def empty(cls) -> "Mesh":
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0

    def __repr__(self):
        return f"Mesh({len(self.vertices)} vertices, {len(self.triangles)} triangles)"

    def bounds(self):
        if len(self.vertices) == 0:
            z = np.zeros(3)
            return z, z
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def diameter(self) -> float:
        lo, hi = self.bounds()
        return float(np.linalg.norm(hi - lo))

    def triangle_coords(self) -> np.ndarray:
        """(m, 3, 3) array of triangle corner coordinates."""
        return self.vertices[self.triangles]

    def translated(self, v) -> "Mesh":
        v = np.asarray(v, dtype=float).reshape(3)
        return Mesh(self.vertices + v, self.triangles)

    def scaled(self, s: float, center=(0.0, 0.0, 0.0)) -> "Mesh":
        c = np.asarray(center, dtype=float).reshape(3)
        return Mesh((self.vertices - c) * float(s) + c, self.triangles)

    def transformed(self, matrix) -> "Mesh":
        m = np.asarray(matrix, dtype=float).reshape(3, 3)
        flips = np.linalg.det(m) < 0
        tris = self.triangles[:, ::-1] if flips else self.triangles
        return Mesh(self.vertices @ m.T, tris)

    def flipped(self) -> "Mesh":
        """Same surface with all triangle orientations reversed."""
        return Mesh(self.vertices, self.triangles[:, ::-1])


def mesh_volume(m: Mesh, *, require_closed: bool = True) -> float:
    """Signed volume by the divergence theorem; positive for outward orientation.

    Raises InvalidMeshError with the offending edges when the mesh is open
    or non-manifold (volume is meaningless then), unless ``require_closed``
    is disabled for diagnostic use.
    """
    if m.is_empty:
        return 0.0
    if require_closed:
        bad_boundary, bad_nonmanifold = _edge_defects(m)
        if bad_boundary or bad_nonmanifold:
            raise InvalidMeshError(
                "volume of a non-closed mesh is undefined; "
                f"boundary edges: {bad_boundary[:8]}, non-manifold edges: {bad_nonmanifold[:8]}"
            )
    tc = m.triangle_coords()
    return float(np.einsum("ij,ij->", tc[:, 0], np.cross(tc[:, 1], tc[:, 2]))) / 6.0


def mesh_area(m: Mesh) -> float:
    """Sum of triangle areas; degenerate triangles contribute nothing."""
    if m.is_empty:
        return 0.0
    tc = m.triangle_coords()
    return float(0.5 * np.linalg.norm(np.cross(tc[:, 1] - tc[:, 0], tc[:, 2] - tc[:, 0]), axis=1).sum())


def triangle_areas(m: Mesh) -> np.ndarray:
    tc = m.triangle_coords()
    if len(tc) == 0:
        return np.zeros(0)
    return 0.5 * np.linalg.norm(np.cross(tc[:, 1] - tc[:, 0], tc[:, 2] - tc[:, 0]), axis=1)


def _edge_map(m: Mesh):
    """Undirected edge -> list of (triangle index, directed as stored)."""
    edges = {}
    for ti, (a, b, c) in enumerate(m.triangles):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            edges.setdefault(key, []).append((ti, u < v))
    return edges


def _edge_defects(m: Mesh):
    """(boundary_edges, nonmanifold_edges) as lists of vertex-index pairs."""
    boundary = []
    nonmanifold = []
    for key, uses in _edge_map(m).items():
        if len(uses) == 1:
            boundary.append(key)
        elif len(uses) > 2:
            nonmanifold.append(key)
    return boundary, nonmanifold


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of validate_mesh; `ok` aggregates the individual checks."""

    closed: bool
    orientable: bool
    manifold: bool
    positive_volume: bool
    self_intersection_free: bool | None
    volume: float
    area: float
    boundary_edges: tuple = ()
    nonmanifold_edges: tuple = ()
    degenerate_triangles: tuple = ()
    intersecting_pairs: tuple = ()
    warnings: tuple = ()

    @property
    def ok(self) -> bool:
        checks = [self.closed, self.orientable, self.manifold, self.positive_volume]
        if self.self_intersection_free is not None:
            checks.append(self.self_intersection_free)
        return all(checks)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "closed": self.closed,
            "orientable": self.orientable,
            "manifold": self.manifold,
            "positive_volume": self.positive_volume,
            "self_intersection_free": self.self_intersection_free,
            "volume": self.volume,
            "area": self.area,
            "boundary_edges": [list(map(int, e)) for e in self.boundary_edges],
            "nonmanifold_edges": [list(map(int, e)) for e in self.nonmanifold_edges],
            "degenerate_triangles": [int(t) for t in self.degenerate_triangles],
            "intersecting_pairs": [list(map(int, p)) for p in self.intersecting_pairs],
            "warnings": list(self.warnings),
        }


def validate_mesh(
    m: Mesh,
    tol: Tolerance | None = None,
    *,
    check_self_intersection: bool = True,
) -> ValidationReport:
    """Full solid-body validation: closedness, orientability, manifoldness,
    self-intersection (delegated to the intersect module) and volume sign.

    Never raises on a bad mesh; the report carries the failures.
    """
    if m.is_empty:
        return ValidationReport(
            closed=True,
            orientable=True,
            manifold=True,
            positive_volume=True,
            self_intersection_free=True if check_self_intersection else None,
            volume=0.0,
            area=0.0,
        )
    tol = tolerance_for(m, tol=tol)
    warnings = []

    degen = tuple(int(i) for i in np.nonzero(triangle_areas(m) <= tol.eps * tol.eps)[0])
    if degen:
        warnings.append(f"{len(degen)} degenerate triangle(s)")

    edge_map = _edge_map(m)
    boundary = []
    nonmanifold = []
    orientable = True
    for key, uses in edge_map.items():
        if len(uses) == 1:
            boundary.append(key)
        elif len(uses) == 2:
            if uses[0][1] == uses[1][1]:
                orientable = False
        else:
            nonmanifold.append(key)
    closed = not boundary
    manifold = not nonmanifold and _vertices_manifold(m, edge_map)

    volume = 0.0
    positive_volume = False
    if closed and not nonmanifold:
        volume = mesh_volume(m, require_closed=False)
        positive_volume = volume > 0
    area = mesh_area(m)

    self_free = None
    pairs = ()
    if check_self_intersection:
        from .intersect import self_intersecting_pairs

        pairs = tuple(self_intersecting_pairs(m))
        self_free = not pairs

    return ValidationReport(
        closed=closed,
        orientable=orientable,
        manifold=manifold,
        positive_volume=positive_volume,
        self_intersection_free=self_free,
        volume=volume,
        area=area,
        boundary_edges=tuple(sorted(boundary)),
        nonmanifold_edges=tuple(sorted(nonmanifold)),
        degenerate_triangles=degen,
        intersecting_pairs=pairs,
        warnings=tuple(warnings),
    )


def _vertices_manifold(m: Mesh, edge_map) -> bool:
    """Every vertex umbrella is a single edge-connected triangle cycle."""
    incident = {}
    for ti, tri in enumerate(m.triangles):
        for v in tri:
            incident.setdefault(int(v), []).append(ti)
    # Adjacency between triangles sharing an edge.
    tri_adj = {}
    for key, uses in edge_map.items():
        if len(uses) == 2:
            a, b = uses[0][0], uses[1][0]
            tri_adj.setdefault(a, {})[key] = b
            tri_adj.setdefault(b, {})[key] = a
    for v, tris in incident.items():
        if len(tris) <= 1:
            continue
        seen = {tris[0]}
        stack = [tris[0]]
        tri_set = set(tris)
        while stack:
            t = stack.pop()
            for key, other in tri_adj.get(t, {}).items():
                if v in key and other in tri_set and other not in seen:
                    seen.add(other)
                    stack.append(other)
        if len(seen) != len(tris):
            return False
    return True


def weld_mesh(vertices, triangles):
    """Merge exactly-equal vertices; drop triangles that collapse under the
    weld (repeated vertex).  Sliver triangles with distinct vertices are
    kept: they contribute nothing to measures but removing them would
    open the surface.

    Returns (Mesh, warnings).  Exact coordinate equality only; tolerance
    welding is the topology module's job.
    """
    vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
    triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    index = {}
    remap = np.zeros(len(vertices), dtype=np.int64)
    out_v = []
    for i, p in enumerate(vertices):
        key = (float(p[0]), float(p[1]), float(p[2]))
        j = index.get(key)
        if j is None:
            j = len(out_v)
            index[key] = j
            out_v.append(key)
        remap[i] = j
    tris = remap[triangles]
    warnings = []
    keep = (tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 0] != tris[:, 2])
    dropped = int(len(tris) - keep.sum())
    tris = tris[keep]
    if dropped:
        warnings.append(f"dropped {dropped} degenerate triangle(s)")
    if len(tris) == 0:
        return Mesh.empty(), warnings
    used = np.unique(tris)
    lookup = {int(v): i for i, v in enumerate(used)}
    va = np.asarray(out_v, dtype=float)[used]
    tris = np.vectorize(lookup.get)(tris)
    return Mesh(va, tris), warnings


def triangulate_polygon(points) -> list[tuple[int, int, int]]:
    """Ear-clip a simple planar polygon given as an (n, 3) ring of points.

    Returns index triples into ``points`` wound like the input ring.
    Raises InvalidInputError on self-touching or fully collinear rings.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    n = len(pts)
    if n < 3:
        raise InvalidInputError("polygon needs at least 3 vertices")
    if n == 3:
        return [(0, 1, 2)]
    normal = _newell_normal(pts)
    if np.linalg.norm(normal) == 0.0:
        raise InvalidInputError("polygon is collinear")
    axis = int(np.argmax(np.abs(normal)))
    u, v = [i for i in range(3) if i != axis]
    p2 = pts[:, [u, v]].copy()
    # Keep the projected ring counter-clockwise regardless of projection parity.
    nxt2 = np.roll(p2, -1, axis=0)
    signed_area = 0.5 * np.sum(p2[:, 0] * nxt2[:, 1] - nxt2[:, 0] * p2[:, 1])
    if signed_area < 0:
        p2[:, 1] = -p2[:, 1]

    ring = list(range(n))
    out = []
    guard = 0
    while len(ring) > 3:
        guard += 1
        if guard > 2 * n * n:
            raise InvalidInputError("polygon could not be triangulated (self-intersecting?)")
        clipped = False
        for k in range(len(ring)):
            i0, i1, i2 = ring[k - 1], ring[k], ring[(k + 1) % len(ring)]
            a, b, c = p2[i0], p2[i1], p2[i2]
            if orient2d(a[0], a[1], b[0], b[1], c[0], c[1]) <= 0:
                continue
            ok = True
            for j in ring:
                if j in (i0, i1, i2):
                    continue
                p = p2[j]
                if (
                    orient2d(a[0], a[1], b[0], b[1], p[0], p[1]) >= 0
                    and orient2d(b[0], b[1], c[0], c[1], p[0], p[1]) >= 0
                    and orient2d(c[0], c[1], a[0], a[1], p[0], p[1]) >= 0
                ):
                    ok = False
                    break
            if ok:
                out.append((i0, i1, i2))
                ring.pop(k)
                clipped = True
                break
        if not clipped:
            raise InvalidInputError("polygon could not be triangulated (self-intersecting?)")
    out.append(tuple(ring))
    return out


def _newell_normal(pts: np.ndarray) -> np.ndarray:
    nxt = np.roll(pts, -1, axis=0)
    n = np.array(
        [
            np.sum((pts[:, 1] - nxt[:, 1]) * (pts[:, 2] + nxt[:, 2])),
            np.sum((pts[:, 2] - nxt[:, 2]) * (pts[:, 0] + nxt[:, 0])),
            np.sum((pts[:, 0] - nxt[:, 0]) * (pts[:, 1] + nxt[:, 1])),
        ]
    )
    return n


def mesh_from_polygons(faces) -> tuple[Mesh, list[str]]:
    """Build a welded triangle mesh from polygonal faces (lists of points)."""
    verts = []
    tris = []
    for face in faces:
        face = np.asarray(face, dtype=float).reshape(-1, 3)
        base = len(verts)
        verts.extend(map(tuple, face))
        for (i, j, k) in triangulate_polygon(face):
            tris.append((base + i, base + j, base + k))
    if not tris:
        return Mesh.empty(), []
    return weld_mesh(np.asarray(verts, dtype=float), np.asarray(tris, dtype=np.int64))


def orient3d_mesh_convention(a, b, c, x) -> int:
    """Sign of x against triangle (a, b, c): +1 on the outward-normal side."""
    return orient3d_points(a, b, c, x)


def point_key(p) -> tuple:
    """Canonical exact key for a point with float or Fraction coordinates."""
    return (Fraction(p[0]), Fraction(p[1]), Fraction(p[2]))
