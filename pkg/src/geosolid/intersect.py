"""3D intersection detection and construction across entity ranks.

Predicates are filtered-exact (see :mod:`geosolid.predicates`); every
constructed intersection point is computed in exact rational arithmetic
and only rounded when handed back to callers, so coincident points
produced by different triangle pairs agree exactly.  Touching
(measure-zero) contacts are reported as Points/Segments outcomes here;
the set operations intentionally discard them (regularized semantics).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from .core import Mesh, Segment3, Triangle3, _edge_defects, as_point
from .errors import InvalidInputError, InvalidMeshError, StaleTreeError
from .predicates import orient3d_points

# Deterministic ray directions for parity tests; later entries are only
# used when an earlier ray grazes an edge or vertex exactly.
_RAY_DIRS = (
    (1, 0, 0),
    (0, 1, 0),
    (0, 0, 1),
    (3, 5, 7),
    (7, 3, 5),
    (5, 7, 3),
    (11, 17, 13),
    (13, 11, 17),
    (1, 1000003, 998989),
)


class OutcomeKind(Enum):
    EMPTY = "empty"
    POINTS = "points"
    SEGMENTS = "segments"
    POLYGONS = "polygons"
    VOLUME = "volume"


@dataclass(frozen=True)
class IntersectionOutcome:
    """Result of an intersection query; payload fields match ``kind``."""

    kind: OutcomeKind
    points: tuple = ()
    segments: tuple = ()
    polylines: tuple = ()  # (tuple_of_points, closed) chains, for mesh curves
    polygons: tuple = ()
    note: str = ""

    def __post_init__(self):
        if self.kind is not OutcomeKind.EMPTY:
            if not (self.points or self.segments or self.polylines or self.polygons or self.note):
                raise InvalidInputError("non-empty outcome kind requires a payload")

    @property
    def is_empty(self) -> bool:
        return self.kind is OutcomeKind.EMPTY


# ---------------------------------------------------------------------------
# exact rational vector helpers


def _fr(p):
    return (Fraction(p[0]), Fraction(p[1]), Fraction(p[2]))


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _add(a, b):
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def _smul(s, a):
    return (s * a[0], s * a[1], s * a[2])


def _cross(a, b):
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _is_zero(v):
    return v[0] == 0 and v[1] == 0 and v[2] == 0


def _to_float(p):
    return (float(p[0]), float(p[1]), float(p[2]))


def _tri_normal_exact(t):
    return _cross(_sub(t[1], t[0]), _sub(t[2], t[0]))


def _point_on_tri(p, tri, normal=None):
    """Exact: p lies on the closed triangle (p, tri rational)."""
    n = normal if normal is not None else _tri_normal_exact(tri)
    if _dot(n, _sub(p, tri[0])) != 0:
        return False
    for i in range(3):
        e0, e1 = tri[i], tri[(i + 1) % 3]
        if _dot(_cross(_sub(e1, e0), _sub(p, e0)), n) < 0:
            return False
    return True


def _clip_line_to_tri(p0, d, tri, n):
    """Clip the rational line p0 + t*d against a triangle's closed in-plane
    half-planes.  Returns (lo, hi) Fractions or None when the line misses."""
    lo = None
    hi = None
    for i in range(3):
        e0, e1 = tri[i], tri[(i + 1) % 3]
        ed = _sub(e1, e0)
        beta = _dot(_cross(ed, d), n)
        alpha = _dot(_cross(ed, _sub(p0, e0)), n)
        if beta == 0:
            if alpha < 0:
                return None
            continue
        t0 = Fraction(-alpha) / Fraction(beta)
        if beta > 0:
            if lo is None or t0 > lo:
                lo = t0
        else:
            if hi is None or t0 < hi:
                hi = t0
    if lo is None or hi is None or lo > hi:
        return None
    return lo, hi


def _plane_line(triA, triB):
    """Rational (point, direction) of the intersection line of two planes,
    or None when the planes are parallel."""
    nA = _tri_normal_exact(triA)
    nB = _tri_normal_exact(triB)
    d = _cross(nA, nB)
    if _is_zero(d):
        return None
    cA = _dot(nA, triA[0])
    cB = _dot(nB, triB[0])
    d2 = Fraction(_dot(d, d))
    p0 = _smul(Fraction(1) / d2, _add(_smul(cA, _cross(nB, d)), _smul(cB, _cross(d, nA))))
    return p0, d, nA, nB


def _clip_polygon_halfplane(poly, e0, e1, n):
    """Sutherland-Hodgman step: keep the side of edge (e0, e1) that the
    reference normal n marks as inside (left of the directed edge)."""
    if not poly:
        return poly
    ed = _sub(e1, e0)
    out = []
    vals = [_dot(_cross(ed, _sub(p, e0)), n) for p in poly]
    m = len(poly)
    for i in range(m):
        cur, nxt = poly[i], poly[(i + 1) % m]
        vcur, vnxt = vals[i], vals[(i + 1) % m]
        if vcur >= 0:
            out.append(cur)
        if (vcur > 0 and vnxt < 0) or (vcur < 0 and vnxt > 0):
            t = Fraction(vcur, vcur - vnxt)
            out.append(_add(cur, _smul(t, _sub(nxt, cur))))
    # drop exact duplicates introduced by on-edge vertices
    dedup = []
    for p in out:
        if not dedup or p != dedup[-1]:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


def coplanar_overlap_polygon(triA, triB):
    """Exact overlap polygon of two coplanar triangles (float or rational
    points).

    The result may be empty, a single point, a segment (2 points), or a
    convex polygon of rational points; orientation follows triB's winding.
    """
    triA = tuple(_fr(p) for p in triA)
    triB = tuple(_fr(p) for p in triB)
    n = _tri_normal_exact(triB)
    poly = list(triA)
    for i in range(3):
        poly = _clip_polygon_halfplane(poly, triB[i], triB[(i + 1) % 3], n)
        if not poly:
            break
    return poly


def _tri_pair_exact(triA, triB):
    """Exact intersection of two triangles (float or rational point triples).

    Returns one of
      ("none",), ("coplanar",), ("point", p), ("segment", p, q)
    with rational payloads.  The coplanar case is left to the caller
    (payload shape differs per use).  The sign prepass runs through the
    filtered predicates, so float inputs are rejected cheaply.
    """
    sA = [orient3d_points(triB[0], triB[1], triB[2], a) for a in triA]
    if all(s > 0 for s in sA) or all(s < 0 for s in sA):
        return ("none",)
    if sA[0] == 0 and sA[1] == 0 and sA[2] == 0:
        return ("coplanar",)
    sB = [orient3d_points(triA[0], triA[1], triA[2], b) for b in triB]
    if all(s > 0 for s in sB) or all(s < 0 for s in sB):
        return ("none",)

    triA = tuple(_fr(p) for p in triA)
    triB = tuple(_fr(p) for p in triB)
    line = _plane_line(triA, triB)
    if line is None:
        return ("none",)  # parallel distinct planes
    p0, d, nA, nB = line
    ia = _clip_line_to_tri(p0, d, triA, nA)
    if ia is None:
        return ("none",)
    ib = _clip_line_to_tri(p0, d, triB, nB)
    if ib is None:
        return ("none",)
    lo = max(ia[0], ib[0])
    hi = min(ia[1], ib[1])
    if lo > hi:
        return ("none",)
    pa = _add(p0, _smul(lo, d))
    if lo == hi:
        return ("point", pa)
    pb = _add(p0, _smul(hi, d))
    return ("segment", pa, pb)


def _require_triangle(t: Triangle3):
    tri = tuple(_fr(p.as_tuple()) for p in (t.p, t.q, t.r))
    if _is_zero(_tri_normal_exact(tri)):
        raise InvalidInputError("degenerate (collinear) triangle")
    return tri


def triangle_triangle(a: Triangle3, b: Triangle3) -> IntersectionOutcome:
    """Intersection of two triangles: Empty, a touch Point, a transversal
    Segment, or the coplanar-overlap Polygon."""
    triA = _require_triangle(a)
    triB = _require_triangle(b)
    res = _tri_pair_exact(triA, triB)
    if res[0] == "none":
        return IntersectionOutcome(OutcomeKind.EMPTY)
    if res[0] == "point":
        return IntersectionOutcome(OutcomeKind.POINTS, points=(_to_float(res[1]),))
    if res[0] == "segment":
        return IntersectionOutcome(
            OutcomeKind.SEGMENTS, segments=((_to_float(res[1]), _to_float(res[2])),)
        )
    poly = coplanar_overlap_polygon(triA, triB)
    if not poly:
        return IntersectionOutcome(OutcomeKind.EMPTY)
    if len(poly) == 1:
        return IntersectionOutcome(OutcomeKind.POINTS, points=(_to_float(poly[0]),))
    if len(poly) == 2:
        return IntersectionOutcome(
            OutcomeKind.SEGMENTS, segments=((_to_float(poly[0]), _to_float(poly[1])),)
        )
    return IntersectionOutcome(
        OutcomeKind.POLYGONS, polygons=(tuple(_to_float(p) for p in poly),)
    )


def segment_triangle(s: Segment3, t: Triangle3) -> IntersectionOutcome:
    """Segment vs triangle: Empty, a piercing Point, or (coplanar case)
    the clipped sub-Segment."""
    tri = _require_triangle(t)
    a = _fr(s.a.as_tuple())
    b = _fr(s.b.as_tuple())
    n = _tri_normal_exact(tri)
    da = _dot(n, _sub(a, tri[0]))
    db = _dot(n, _sub(b, tri[0]))
    if da == 0 and db == 0:
        # coplanar: clip the [0, 1] parameter interval to the triangle
        d = _sub(b, a)
        iv = _clip_line_to_tri(a, d, tri, n)
        if iv is None:
            return IntersectionOutcome(OutcomeKind.EMPTY)
        lo = max(iv[0], Fraction(0))
        hi = min(iv[1], Fraction(1))
        if lo > hi:
            return IntersectionOutcome(OutcomeKind.EMPTY)
        pa = _add(a, _smul(lo, d))
        if lo == hi:
            return IntersectionOutcome(OutcomeKind.POINTS, points=(_to_float(pa),))
        pb = _add(a, _smul(hi, d))
        return IntersectionOutcome(
            OutcomeKind.SEGMENTS, segments=((_to_float(pa), _to_float(pb)),)
        )
    if (da > 0 and db > 0) or (da < 0 and db < 0):
        return IntersectionOutcome(OutcomeKind.EMPTY)
    tau = Fraction(da, da - db)
    x = _add(a, _smul(tau, _sub(b, a)))
    if _point_on_tri(x, tri, n):
        return IntersectionOutcome(OutcomeKind.POINTS, points=(_to_float(x),))
    return IntersectionOutcome(OutcomeKind.EMPTY)


# ---------------------------------------------------------------------------
# axis-aligned bounding-box tree

_LEAF_SIZE = 8


class AabbTree:
    """Static AABB hierarchy over boxes (median split on the longest axis,
    leaf size 8).  Deterministic for identical input."""

    __slots__ = ("boxes", "_nodes", "_order", "digest")

    def __init__(self, boxes):
        boxes = np.asarray(boxes, dtype=float).reshape(-1, 6)
        self.boxes = boxes
        n = len(boxes)
        self._order = np.arange(n)
        # node: (lo[3], hi[3], left, right, start, count); leaf when left == -1
        self._nodes = []
        if n:
            self._build(0, n)
        self.digest = _boxes_digest(boxes)

    def _build(self, start, end):
        idx = self._order[start:end]
        lo = self.boxes[idx, :3].min(axis=0)
        hi = self.boxes[idx, 3:].max(axis=0)
        node_id = len(self._nodes)
        self._nodes.append([lo, hi, -1, -1, start, end - start])
        if end - start <= _LEAF_SIZE:
            return node_id
        centers = (self.boxes[idx, :3] + self.boxes[idx, 3:]) * 0.5
        axis = int(np.argmax(hi - lo))
        key = np.lexsort((idx, centers[:, axis]))
        self._order[start:end] = idx[key]
        mid = start + (end - start) // 2
        left = self._build(start, mid)
        right = self._build(mid, end)
        self._nodes[node_id][2] = left
        self._nodes[node_id][3] = right
        return node_id

    def __len__(self):
        return len(self.boxes)

    def query_box(self, lo, hi):
        """Indices of boxes overlapping [lo, hi] (closed)."""
        if not self._nodes:
            return []
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        out = []
        stack = [0]
        while stack:
            node = self._nodes[stack.pop()]
            if np.any(node[0] > hi) or np.any(node[1] < lo):
                continue
            if node[2] == -1:
                for i in self._order[node[4] : node[4] + node[5]]:
                    b = self.boxes[i]
                    if not (np.any(b[:3] > hi) or np.any(b[3:] < lo)):
                        out.append(int(i))
            else:
                stack.append(node[3])
                stack.append(node[2])
        return out

    def query_ray(self, origin, direction, pad=0.0):
        """Indices of boxes the ray (t >= 0) may pass through; conservative."""
        if not self._nodes:
            return []
        o = np.asarray(origin, dtype=float)
        d = np.asarray(direction, dtype=float)
        out = []
        stack = [0]
        while stack:
            node = self._nodes[stack.pop()]
            if not _ray_box(o, d, node[0] - pad, node[1] + pad):
                continue
            if node[2] == -1:
                for i in self._order[node[4] : node[4] + node[5]]:
                    b = self.boxes[i]
                    if _ray_box(o, d, b[:3] - pad, b[3:] + pad):
                        out.append(int(i))
            else:
                stack.append(node[3])
                stack.append(node[2])
        return out

    def pair_candidates(self, other: "AabbTree", pad=0.0):
        """(i, j) pairs whose boxes overlap between two trees."""
        if not self._nodes or not other._nodes:
            return []
        out = []
        stack = [(0, 0)]
        while stack:
            ia, ib = stack.pop()
            na, nb = self._nodes[ia], other._nodes[ib]
            if np.any(na[0] > nb[1] + pad) or np.any(na[1] < nb[0] - pad):
                continue
            leaf_a = na[2] == -1
            leaf_b = nb[2] == -1
            if leaf_a and leaf_b:
                for i in self._order[na[4] : na[4] + na[5]]:
                    ba = self.boxes[i]
                    for j in other._order[nb[4] : nb[4] + nb[5]]:
                        bb = other.boxes[j]
                        if not (np.any(ba[:3] > bb[3:] + pad) or np.any(ba[3:] < bb[:3] - pad)):
                            out.append((int(i), int(j)))
            elif leaf_b or (not leaf_a and na[5] >= nb[5]):
                stack.append((self._nodes[ia][2], ib))
                stack.append((self._nodes[ia][3], ib))
            else:
                stack.append((ia, other._nodes[ib][2]))
                stack.append((ia, other._nodes[ib][3]))
        return out

    def self_pair_candidates(self, pad=0.0):
        """Unordered (i < j) pairs within one tree whose boxes overlap."""
        out = []
        n = len(self.boxes)
        for i in range(n):
            b = self.boxes[i]
            for j in self.query_box(b[:3] - pad, b[3:] + pad):
                if j > i:
                    out.append((i, int(j)))
        return out


def _ray_box(o, d, lo, hi) -> bool:
    tmin, tmax = 0.0, np.inf
    for k in range(3):
        if d[k] == 0.0:
            if o[k] < lo[k] or o[k] > hi[k]:
                return False
            continue
        inv = 1.0 / d[k]
        t0 = (lo[k] - o[k]) * inv
        t1 = (hi[k] - o[k]) * inv
        if inv < 0:
            t0, t1 = t1, t0
        tmin = max(tmin, t0)
        tmax = min(tmax, t1)
        if tmax < tmin:
            return False
    return True


def _boxes_digest(boxes: np.ndarray) -> bytes:
    import hashlib

    return hashlib.sha256(np.ascontiguousarray(boxes).tobytes()).digest()


def triangle_boxes(m: Mesh) -> np.ndarray:
    tc = m.triangle_coords()
    if len(tc) == 0:
        return np.zeros((0, 6))
    return np.concatenate([tc.min(axis=1), tc.max(axis=1)], axis=1)


def mesh_tree(m: Mesh) -> AabbTree:
    return AabbTree(triangle_boxes(m))


# ---------------------------------------------------------------------------
# point-in-solid classification

INSIDE = "inside"
BOUNDARY = "boundary"
OUTSIDE = "outside"


class MeshProbe:
    """A mesh plus its triangle tree and lazily cached rational corners,
    shared by repeated classification queries."""

    __slots__ = ("mesh", "tree", "pad", "_rats")

    def __init__(self, mesh: Mesh, tree: AabbTree | None = None):
        self.mesh = mesh
        self.tree = tree if tree is not None else mesh_tree(mesh)
        diam = mesh.diameter()
        self.pad = 1e-9 * diam + 1e-300
        self._rats = {}

    def rational_tri(self, ti: int):
        tri = self._rats.get(ti)
        if tri is None:
            tc = self.mesh.vertices[self.mesh.triangles[ti]]
            tri = tuple(_fr(p) for p in tc)
            self._rats[ti] = tri
        return tri

    def on_boundary(self, p_rat, p_flt) -> int | None:
        """Index of a triangle whose closed surface contains the point, or None."""
        lo = np.asarray(p_flt) - self.pad
        hi = np.asarray(p_flt) + self.pad
        for ti in self.tree.query_box(lo, hi):
            if _point_on_tri(p_rat, self.rational_tri(ti)):
                return ti
        return None

    def classify(self, p_rat, p_flt=None) -> str:
        if p_flt is None:
            p_flt = _to_float(p_rat)
        if self.mesh.is_empty:
            return OUTSIDE
        if self.on_boundary(p_rat, p_flt) is not None:
            return BOUNDARY
        for d in _RAY_DIRS:
            parity = self._ray_parity(p_rat, p_flt, d)
            if parity is not None:
                return INSIDE if parity else OUTSIDE
        raise InvalidInputError("ray parity failed in all directions (degenerate mesh?)")

    def _ray_parity(self, p_rat, p_flt, direction):
        """Crossing parity along p + t*direction for t > 0, or None when the
        ray grazes an edge/vertex/coplanar face and another direction is needed."""
        cands = self.tree.query_ray(np.asarray(p_flt), np.asarray(direction, dtype=float), pad=self.pad)
        d = tuple(Fraction(c) for c in direction)
        count = 0
        for ti in cands:
            tri = self.rational_tri(ti)
            n = _tri_normal_exact(tri)
            denom = _dot(n, d)
            dist = _dot(n, _sub(tri[0], p_rat))
            if denom == 0:
                if dist == 0:
                    return None  # ray travels inside the triangle's plane
                continue
            t = Fraction(dist, denom) if not isinstance(dist, Fraction) else dist / denom
            if t <= 0:
                continue
            x = _add(p_rat, _smul(t, d))
            strict_inside = True
            for i in range(3):
                e0, e1 = tri[i], tri[(i + 1) % 3]
                side = _dot(_cross(_sub(e1, e0), _sub(x, e0)), n)
                if side == 0:
                    return None  # grazes an edge or vertex
                if side < 0:
                    strict_inside = False
                    break
            if strict_inside:
                count += 1
        return count % 2


def point_in_body(p, m: Mesh, tree: AabbTree | None = None) -> str:
    """Classify a point against a closed solid: 'inside', 'boundary', 'outside'."""
    boundary, nonmanifold = _edge_defects(m)
    if boundary or nonmanifold:
        raise InvalidMeshError("point_in_body requires a closed manifold mesh")
    pt = as_point(p)
    probe = MeshProbe(m, tree)
    return probe.classify(_fr(pt.as_tuple()), pt.as_tuple())


# ---------------------------------------------------------------------------
# mesh-mesh intersection curve and scene-scale detection


def candidate_tri_pairs(a: Mesh, b: Mesh, tree_a: AabbTree | None = None, tree_b: AabbTree | None = None):
    ta = tree_a if tree_a is not None else mesh_tree(a)
    tb = tree_b if tree_b is not None else mesh_tree(b)
    pad = 1e-12 * max(a.diameter(), b.diameter(), 1.0)
    return ta.pair_candidates(tb, pad=pad)


def mesh_mesh_curve(a: Mesh, b: Mesh) -> IntersectionOutcome:
    """Intersection curve(s) of two closed solid boundaries.

    Transversal contributions assemble into polylines (closed for generic
    transversal intersections); coplanar face overlaps are reported as
    polygons alongside.  Nested solids with disjoint boundaries report a
    Volume outcome with a containment note.
    """
    for name, m in (("first", a), ("second", b)):
        bad_b, bad_nm = _edge_defects(m)
        if bad_b or bad_nm:
            raise InvalidMeshError(f"{name} mesh is not a closed manifold")
    if a.is_empty or b.is_empty:
        return IntersectionOutcome(OutcomeKind.EMPTY)
    tca = a.triangle_coords()
    tcb = b.triangle_coords()
    segs = {}
    contact_segs = {}  # degenerate coplanar contacts; not part of the curve
    pts = set()
    polys = []
    for i, j in candidate_tri_pairs(a, b):
        triA = tuple(map(tuple, tca[i]))
        triB = tuple(map(tuple, tcb[j]))
        res = _tri_pair_exact(triA, triB)
        if res[0] == "none":
            continue
        if res[0] == "point":
            pts.add(tuple(res[1]))
        elif res[0] == "segment":
            k1, k2 = tuple(res[1]), tuple(res[2])
            if k1 != k2:
                key = (k1, k2) if k1 <= k2 else (k2, k1)
                # A segment pinned to a boundary edge of BOTH triangles is a
                # touching rim (surfaces meet without crossing there); it
                # bounds coplanar patches rather than the crossing curve.
                ra = tuple(_fr(p) for p in triA)
                rb = tuple(_fr(p) for p in triB)
                if _segment_on_tri_edge(res[1], res[2], ra) and _segment_on_tri_edge(
                    res[1], res[2], rb
                ):
                    contact_segs[key] = True
                else:
                    segs[key] = True
            else:
                pts.add(k1)
        else:  # coplanar
            poly = coplanar_overlap_polygon(triA, triB)
            if _polygon_area_positive(poly):
                polys.append(tuple(_to_float(p) for p in poly))
            elif len(poly) >= 2:
                k1, k2 = tuple(poly[0]), tuple(poly[1])
                if k1 != k2:
                    key = (k1, k2) if k1 <= k2 else (k2, k1)
                    contact_segs[key] = True
            elif len(poly) == 1:
                pts.add(tuple(poly[0]))

    polylines = _assemble_polylines(list(segs.keys()))
    if polylines:
        return IntersectionOutcome(
            OutcomeKind.SEGMENTS,
            segments=tuple((_to_float(p), _to_float(q)) for p, q in segs.keys()),
            polylines=polylines,
            polygons=tuple(polys),
        )
    if polys:
        return IntersectionOutcome(OutcomeKind.POLYGONS, polygons=tuple(polys))
    if contact_segs:
        return IntersectionOutcome(
            OutcomeKind.SEGMENTS,
            segments=tuple((_to_float(p), _to_float(q)) for p, q in contact_segs.keys()),
            polylines=_assemble_polylines(list(contact_segs.keys())),
        )
    if pts:
        return IntersectionOutcome(
            OutcomeKind.POINTS, points=tuple(sorted(_to_float(p) for p in pts))
        )
    # boundaries disjoint; check solid containment
    pa = MeshProbe(a)
    pb = MeshProbe(b)
    va = _fr(a.vertices[0])
    vb = _fr(b.vertices[0])
    if pb.classify(va) == INSIDE:
        return IntersectionOutcome(OutcomeKind.VOLUME, note="first solid inside second")
    if pa.classify(vb) == INSIDE:
        return IntersectionOutcome(OutcomeKind.VOLUME, note="second solid inside first")
    return IntersectionOutcome(OutcomeKind.EMPTY)


def _assemble_polylines(seg_keys):
    """Chain exact-endpoint segments into maximal polylines; closed loops get
    closed=True.  Deterministic: starts are chosen in sorted key order."""
    adj = {}
    for p, q in seg_keys:
        adj.setdefault(p, []).append(q)
        adj.setdefault(q, []).append(p)
    for v in adj:
        adj[v].sort()
    remaining = {k: True for k in seg_keys}

    def skey(u, v):
        return (u, v) if u <= v else (v, u)

    polylines = []
    # open chains first (vertices of degree != 2), then remaining cycles
    starts = sorted(v for v in adj if len(adj[v]) != 2) + sorted(adj.keys())
    for start in starts:
        while True:
            first = None
            for w in adj[start]:
                if remaining.get(skey(start, w)):
                    first = w
                    break
            if first is None:
                break
            remaining[skey(start, first)] = False
            chain = [start, first]
            while True:
                cur = chain[-1]
                nxt = None
                for w in adj[cur]:
                    if remaining.get(skey(cur, w)):
                        nxt = w
                        break
                if nxt is None:
                    break
                remaining[skey(cur, nxt)] = False
                chain.append(nxt)
                if nxt == chain[0]:
                    break
            closed = len(chain) > 3 and chain[0] == chain[-1]
            if closed:
                chain.pop()
            polylines.append((tuple(_to_float(p) for p in chain), closed))
    return tuple(polylines)


def solids_intersect(a: Mesh, b: Mesh, probe_a: MeshProbe | None = None, probe_b: MeshProbe | None = None) -> bool:
    """Solid-semantics test: boundary contact or volumetric overlap counts."""
    if a.is_empty or b.is_empty:
        return False
    pa = probe_a if probe_a is not None else MeshProbe(a)
    pb = probe_b if probe_b is not None else MeshProbe(b)
    tca = a.triangle_coords()
    tcb = b.triangle_coords()
    for i, j in pa.tree.pair_candidates(pb.tree, pad=pa.pad + pb.pad):
        triA = tuple(map(tuple, tca[i]))
        triB = tuple(map(tuple, tcb[j]))
        res = _tri_pair_exact(triA, triB)
        if res[0] == "coplanar":
            poly = coplanar_overlap_polygon(triA, triB)
            if poly:
                return True
        elif res[0] != "none":
            return True
    if pb.classify(_fr(a.vertices[0])) == INSIDE:
        return True
    if pa.classify(_fr(b.vertices[0])) == INSIDE:
        return True
    return False


def build_scene_tree(scene) -> AabbTree:
    """Entity-level AABB tree over a list of meshes."""
    boxes = []
    for m in scene:
        lo, hi = m.bounds()
        boxes.append(np.concatenate([lo, hi]))
    return AabbTree(np.asarray(boxes, dtype=float).reshape(-1, 6))


def detect_pairs(scene, tree: AabbTree) -> list[tuple[int, int]]:
    """Exactly the index pairs of scene entities whose solids intersect.

    The tree must have been built over this scene (stale trees are
    rejected); results match the brute-force all-pairs scan.
    """
    boxes = []
    for m in scene:
        lo, hi = m.bounds()
        boxes.append(np.concatenate([lo, hi]))
    digest = _boxes_digest(np.asarray(boxes, dtype=float).reshape(-1, 6))
    if len(tree) != len(scene) or tree.digest != digest:
        raise StaleTreeError("tree does not match the scene it is queried with")
    probes = {}

    def probe(i):
        p = probes.get(i)
        if p is None:
            p = MeshProbe(scene[i])
            probes[i] = p
        return p

    out = []
    for i, j in sorted(tree.self_pair_candidates(pad=1e-12)):
        if solids_intersect(scene[i], scene[j], probe(i), probe(j)):
            out.append((i, j))
    return out


def detect_pairs_brute(scene) -> list[tuple[int, int]]:
    """Reference O(n^2) scan with the same narrow phase (for testing/benchmark)."""
    out = []
    probes = {}
    boxes = []
    for m in scene:
        lo, hi = m.bounds()
        boxes.append((float(lo[0]), float(lo[1]), float(lo[2]), float(hi[0]), float(hi[1]), float(hi[2])))

    def probe(i):
        p = probes.get(i)
        if p is None:
            p = MeshProbe(scene[i])
            probes[i] = p
        return p

    n = len(scene)
    for i in range(n):
        lx, ly, lz, hx, hy, hz = boxes[i]
        for j in range(i + 1, n):
            b = boxes[j]
            if lx > b[3] or ly > b[4] or lz > b[5] or hx < b[0] or hy < b[1] or hz < b[2]:
                continue
            if solids_intersect(scene[i], scene[j], probe(i), probe(j)):
                out.append((i, j))
    return out


# ---------------------------------------------------------------------------
# self-intersection scan (used by validate_mesh)


def self_intersecting_pairs(m: Mesh) -> list[tuple[int, int]]:
    """Triangle index pairs that intersect beyond any shared vertex/edge.

    Sharing is judged by exact coordinates, not indices, so meshes whose
    shells duplicate contact vertices (e.g. touching lobes of a symmetric
    difference) are not flagged for their legitimate seam contact.
    """
    if m.is_empty:
        return []
    tc = m.triangle_coords()
    tree = mesh_tree(m)
    offending = []
    tris = m.triangles
    verts = m.vertices
    # canonical coordinate ids (exact equality)
    coord_id = {}
    canon = np.zeros(len(verts), dtype=np.int64)
    for vi, p in enumerate(verts):
        key = (float(p[0]), float(p[1]), float(p[2]))
        canon[vi] = coord_id.setdefault(key, len(coord_id))
    for i, j in tree.self_pair_candidates(pad=0.0):
        ci = [int(canon[v]) for v in tris[i]]
        cj = [int(canon[v]) for v in tris[j]]
        shared_c = sorted(set(ci) & set(cj))
        triA = tuple(map(tuple, tc[i]))
        triB = tuple(map(tuple, tc[j]))
        if len(shared_c) == 3:
            offending.append((i, j))  # duplicate face
            continue
        if len(shared_c) == 2:
            # Non-coplanar edge-sharing triangles meet exactly on that edge:
            # both planes contain the edge line, and each triangle meets that
            # line in the edge itself.  Only the coplanar case can overlap.
            apex_b = next(k for k in range(3) if cj[k] not in shared_c)
            if orient3d_points(triA[0], triA[1], triA[2], triB[apex_b]) != 0:
                continue
            if _polygon_area_positive(coplanar_overlap_polygon(triA, triB)):
                offending.append((i, j))
            continue
        if len(shared_c) == 1:
            sc = shared_c[0]
            others = [k for k in range(3) if cj[k] != sc]
            s1 = orient3d_points(triA[0], triA[1], triA[2], triB[others[0]])
            s2 = orient3d_points(triA[0], triA[1], triA[2], triB[others[1]])
            if s1 * s2 > 0:
                continue  # j crosses i's plane only at the shared vertex
            res = _tri_pair_exact(triA, triB)
            if res[0] == "none":
                continue
            k_sh = next(k for k in range(3) if ci[k] == sc)
            shared_pt = _fr(tc[i][k_sh])
            if res[0] == "point" and tuple(res[1]) == tuple(shared_pt):
                continue
            if res[0] == "coplanar":
                poly = coplanar_overlap_polygon(triA, triB)
                if not poly:
                    continue
                if not _polygon_area_positive(poly) and all(
                    tuple(p) == tuple(shared_pt) for p in poly
                ):
                    continue
            offending.append((i, j))
            continue
        res = _tri_pair_exact(triA, triB)
        if res[0] == "coplanar":
            if coplanar_overlap_polygon(triA, triB):
                offending.append((i, j))
        elif res[0] != "none":
            offending.append((i, j))
    return offending


def _segment_on_tri_edge(pa, pb, tri) -> bool:
    """Exact: both rational points lie on a single edge line of the triangle."""
    n = _tri_normal_exact(tri)
    for i in range(3):
        e0, e1 = tri[i], tri[(i + 1) % 3]
        ed = _sub(e1, e0)
        if _dot(_cross(ed, _sub(pa, e0)), n) == 0 and _dot(_cross(ed, _sub(pb, e0)), n) == 0:
            return True
    return False


def _polygon_area_positive(poly) -> bool:
    if len(poly) < 3:
        return False
    acc = (Fraction(0), Fraction(0), Fraction(0))
    for i in range(1, len(poly) - 1):
        acc = _add(acc, _cross(_sub(poly[i], poly[0]), _sub(poly[i + 1], poly[0])))
    return not _is_zero(acc)
