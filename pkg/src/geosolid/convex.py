"""3D convex hulls, convexity testing, and Minkowski sums.

The hull is an incremental quickhull driven by the filtered-exact
orientation predicate: visibility decisions near zero are re-evaluated
in exact arithmetic, so the output is the true hull of the input floats.
Exactly-coplanar hull triangles are merged into polygonal facets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Mesh, Tolerance, mesh_volume, tolerance_for, validate_mesh
from .errors import DegenerateInputError, InvalidInputError, InvalidMeshError
from .predicates import orient3d_batch, orient3d_points


@dataclass(frozen=True)
class Facet:
    """One polygonal hull facet: outward unit normal, plane offset, and the
    vertex ring (counter-clockwise seen from outside)."""

    normal: tuple
    offset: float
    ring: tuple

    def plane(self):
        return np.asarray(self.normal, dtype=float), self.offset


@dataclass(frozen=True)
class ConvexPolytope:
    """Convex body as vertices plus facet planes.

    Degenerate operands (point/segment/polygon) carry an empty facet tuple
    and a lower affine dimension; they are legal Minkowski operands but not
    hull outputs.
    """

    vertices: np.ndarray
    facets: tuple
    affine_dim: int = 3

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def to_mesh(self) -> Mesh:
        """Triangulated boundary (fan per facet ring), outward oriented."""
        if self.affine_dim < 3:
            raise DegenerateInputError(
                "degenerate polytope has no solid mesh", affine_dim=self.affine_dim
            )
        tris = []
        for f in self.facets:
            r = f.ring
            for k in range(1, len(r) - 1):
                tris.append((r[0], r[k], r[k + 1]))
        return Mesh(self.vertices, np.asarray(tris, dtype=np.int64))

    def volume(self) -> float:
        return mesh_volume(self.to_mesh())

    def contains(self, p, eps: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float).reshape(3)
        for f in self.facets:
            n, d = f.plane()
            if float(n @ p) - d > eps:
                return False
        return True


def _dedup_points(pts: np.ndarray):
    seen = {}
    keep = []
    for i, p in enumerate(pts):
        key = (float(p[0]), float(p[1]), float(p[2]))
        if key not in seen:
            seen[key] = i
            keep.append(i)
    return pts[keep]


def _affine_dim(pts: np.ndarray) -> int:
    """Exact affine dimension of a point set (0, 1, 2 or 3)."""
    if len(pts) <= 1:
        return 0
    p0 = pts[0]
    i1 = next((i for i in range(1, len(pts)) if tuple(pts[i]) != tuple(p0)), None)
    if i1 is None:
        return 0
    from .predicates import exact_cross

    i2 = None
    for i in range(1, len(pts)):
        if i == i1:
            continue
        if exact_cross(pts[i1] - p0, pts[i] - p0) != (0, 0, 0):
            i2 = i
            break
    if i2 is None:
        return 1
    for i in range(1, len(pts)):
        if orient3d_points(p0, pts[i1], pts[i2], pts[i]) != 0:
            return 3
    return 2


class _Hull:
    """Incremental quickhull state: triangles, adjacency, conflict sets."""

    def __init__(self, pts):
        self.pts = pts
        self.faces = {}  # fid -> (a, b, c)
        self.edge_face = {}  # directed edge -> fid
        self.outside = {}  # fid -> np.ndarray of point ids
        self._next = 0

    def add_face(self, a, b, c):
        fid = self._next
        self._next += 1
        self.faces[fid] = (a, b, c)
        for e in ((a, b), (b, c), (c, a)):
            if e in self.edge_face:
                raise InvalidInputError(
                    "hull topology corrupted (duplicate directed edge); "
                    "this should be unreachable with exact predicates"
                )
            self.edge_face[e] = fid
        return fid

    def drop_face(self, fid):
        a, b, c = self.faces.pop(fid)
        for e in ((a, b), (b, c), (c, a)):
            if self.edge_face.get(e) == fid:
                del self.edge_face[e]
        self.outside.pop(fid, None)

    def signs_certain(self, fid, ids):
        a, b, c = self.faces[fid]
        signs, certain = orient3d_batch(self.pts[a], self.pts[b], self.pts[c], self.pts[ids])
        if not np.all(certain):
            pa, pb, pc = self.pts[a], self.pts[b], self.pts[c]
            for k in np.nonzero(~certain)[0]:
                signs[k] = orient3d_points(
                    tuple(pa), tuple(pb), tuple(pc), tuple(self.pts[ids[k]])
                )
        return signs

    def is_above(self, fid, pid) -> int:
        a, b, c = self.faces[fid]
        return orient3d_points(
            tuple(self.pts[a]), tuple(self.pts[b]), tuple(self.pts[c]), tuple(self.pts[pid])
        )


def _initial_simplex(pts) -> tuple:
    n = len(pts)
    order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))
    i0 = int(order[0])
    d = np.linalg.norm(pts - pts[i0], axis=1)
    i1 = int(np.argmax(d))
    if tuple(pts[i1]) == tuple(pts[i0]):
        raise DegenerateInputError("all points coincide", affine_dim=0)
    e1 = pts[i1] - pts[i0]
    cr = np.cross(np.broadcast_to(e1, pts.shape), pts - pts[i0])
    a = np.linalg.norm(cr, axis=1)
    cand = np.argsort(-a)
    from .predicates import exact_cross

    i2 = None
    for i in cand:
        i = int(i)
        if i in (i0, i1):
            continue
        if a[i] == 0.0 and exact_cross(e1, pts[i] - pts[i0]) == (0, 0, 0):
            break  # sorted descending: the rest are collinear too (float zero)
        if exact_cross(e1, pts[i] - pts[i0]) != (0, 0, 0):
            i2 = i
            break
    if i2 is None:
        raise DegenerateInputError("points are collinear", affine_dim=1)
    signs, certain = orient3d_batch(pts[i0], pts[i1], pts[i2], pts)
    vol = np.abs(
        np.einsum(
            "ij,j->i",
            pts - pts[i0],
            np.cross(pts[i1] - pts[i0], pts[i2] - pts[i0]),
        )
    )
    i3 = None
    for i in np.argsort(-vol):
        i = int(i)
        if i in (i0, i1, i2):
            continue
        s = orient3d_points(tuple(pts[i0]), tuple(pts[i1]), tuple(pts[i2]), tuple(pts[i]))
        if s != 0:
            i3 = i
            break
        if vol[i] == 0.0:
            break
    if i3 is None:
        raise DegenerateInputError("points are coplanar", affine_dim=2)
    if orient3d_points(tuple(pts[i0]), tuple(pts[i1]), tuple(pts[i2]), tuple(pts[i3])) < 0:
        i1, i2 = i2, i1
    return i0, i1, i2, i3


def convex_hull(points, tol: Tolerance | None = None) -> ConvexPolytope:
    """Minimal convex polytope containing the points.

    Interior and non-extreme points never appear in the output vertex set;
    exactly-coplanar neighbouring triangles merge into polygonal facets.
    Raises DegenerateInputError (with the affine dimension) for fewer than
    4 affinely independent points.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("hull input contains non-finite coordinates")
    pts = _dedup_points(pts)
    if len(pts) < 4:
        raise DegenerateInputError(
            f"need at least 4 points, got {len(pts)}", affine_dim=_affine_dim(pts)
        )

    i0, i1, i2, i3 = _initial_simplex(pts)
    hull = _Hull(pts)
    f0 = hull.add_face(i0, i2, i1)
    f1 = hull.add_face(i0, i1, i3)
    f2 = hull.add_face(i1, i2, i3)
    f3 = hull.add_face(i2, i0, i3)

    ids = np.array([i for i in range(len(pts)) if i not in (i0, i1, i2, i3)], dtype=np.int64)
    for fid in (f0, f1, f2, f3):
        if len(ids) == 0:
            break
        signs = hull.signs_certain(fid, ids)
        outside = ids[signs > 0]
        if len(outside):
            hull.outside[fid] = outside
            ids = ids[signs <= 0]

    work = sorted(hull.outside.keys())
    while work:
        fid = work.pop()
        cand = hull.outside.pop(fid, None)
        if cand is None or fid not in hull.faces:
            continue
        a, b, c = hull.faces[fid]
        pa = hull.pts[a]
        dists = np.abs(
            np.einsum(
                "ij,j->i",
                hull.pts[cand] - pa,
                np.cross(hull.pts[b] - pa, hull.pts[c] - pa),
            )
        )
        p = int(cand[int(np.argmax(dists))])

        # Deletion region: the edge-connected faces with orient(f, p) >= 0.
        # Including coplanar faces keeps the re-fanned facet planar regions
        # consistent (a cone face coplanar with a surviving face could
        # overlap it); the normals around any hull vertex form a convex
        # spherical fan, so the >= 0 region cannot pinch at a vertex and the
        # horizon stays a simple cycle.
        visible = {fid}
        stack = [fid]
        while stack:
            g = stack.pop()
            ga, gb, gc = hull.faces[g]
            for (u, v) in ((ga, gb), (gb, gc), (gc, ga)):
                nb = hull.edge_face.get((v, u))
                if nb is None or nb in visible:
                    continue
                if hull.is_above(nb, p) >= 0:
                    visible.add(nb)
                    stack.append(nb)
        horizon = []
        pool = [cand]
        for g in visible:
            ga, gb, gc = hull.faces[g]
            for (u, v) in ((ga, gb), (gb, gc), (gc, ga)):
                nb = hull.edge_face.get((v, u))
                if nb is None or nb not in visible:
                    horizon.append((u, v))
        for g in sorted(visible):
            extra = hull.outside.pop(g, None)
            if extra is not None:
                pool.append(extra)
            hull.drop_face(g)
        pool = np.unique(np.concatenate(pool))
        pool = pool[pool != p]

        new_faces = []
        for (u, v) in horizon:
            new_faces.append(hull.add_face(u, v, p))
        for nf in new_faces:
            if len(pool) == 0:
                break
            signs = hull.signs_certain(nf, pool)
            outside = pool[signs > 0]
            if len(outside):
                hull.outside[nf] = outside
                work.append(nf)
                pool = pool[signs <= 0]

    return _finalize(hull)


def _finalize(hull: _Hull) -> ConvexPolytope:
    pts = hull.pts
    faces = {fid: tri for fid, tri in hull.faces.items()}

    # group exactly-coplanar adjacent triangles into polygonal facets
    group_of = {}
    groups = []
    for fid in sorted(faces):
        if fid in group_of:
            continue
        gid = len(groups)
        base = faces[fid]
        members = [fid]
        group_of[fid] = gid
        queue = [fid]
        while queue:
            g = queue.pop()
            ga, gb, gc = faces[g]
            for (u, v) in ((ga, gb), (gb, gc), (gc, ga)):
                nb = hull.edge_face.get((v, u))
                if nb is None or nb in group_of:
                    continue
                apexes = [w for w in faces[nb]]
                if all(
                    orient3d_points(
                        tuple(pts[base[0]]), tuple(pts[base[1]]), tuple(pts[base[2]]), tuple(pts[w])
                    )
                    == 0
                    for w in apexes
                ):
                    group_of[nb] = gid
                    members.append(nb)
                    queue.append(nb)
        groups.append((base, members))

    # trace each facet's boundary ring and drop pass-through (collinear)
    # vertices so the output vertex set is exactly the extreme points
    from .predicates import collinear3d

    raw_rings = []
    for base, members in groups:
        member_set = set(members)
        boundary = {}
        for g in members:
            ga, gb, gc = faces[g]
            for (u, v) in ((ga, gb), (gb, gc), (gc, ga)):
                nb = hull.edge_face.get((v, u))
                if nb is None or nb not in member_set:
                    boundary[u] = v
        start = min(boundary.keys())
        ring = [start]
        cur = boundary[start]
        guard = 0
        while cur != start:
            ring.append(cur)
            cur = boundary[cur]
            guard += 1
            if guard > len(boundary) + 1:
                raise InvalidInputError("facet ring tracing failed")
        changed = True
        while changed and len(ring) > 3:
            changed = False
            for k in range(len(ring)):
                u = ring[k - 1]
                v = ring[k]
                w = ring[(k + 1) % len(ring)]
                if collinear3d(tuple(pts[u]), tuple(pts[v]), tuple(pts[w])):
                    ring.pop(k)
                    changed = True
                    break
        raw_rings.append((base, ring))

    used = sorted(
        {v for _base, ring in raw_rings for v in ring},
        key=lambda i: (pts[i][0], pts[i][1], pts[i][2]),
    )
    remap = {old: new for new, old in enumerate(used)}
    vertices = pts[used]

    facets = []
    for base, ring in raw_rings:
        n = np.cross(pts[base[1]] - pts[base[0]], pts[base[2]] - pts[base[0]])
        n = n / np.linalg.norm(n)
        ids = [remap[i] for i in ring]
        shift = ids.index(min(ids))
        ids = ids[shift:] + ids[:shift]
        facets.append(
            Facet(
                normal=tuple(float(x) for x in n),
                offset=float(n @ pts[base[0]]),
                ring=tuple(ids),
            )
        )
    facets.sort(key=lambda f: f.ring)
    return ConvexPolytope(vertices=vertices, facets=tuple(facets), affine_dim=3)


def degenerate_polytope(points) -> ConvexPolytope:
    """Relaxed polytope (point/segment/planar polygon) for Minkowski operands."""
    pts = _dedup_points(np.asarray(points, dtype=float).reshape(-1, 3))
    return ConvexPolytope(vertices=pts, facets=(), affine_dim=_affine_dim(pts))


def is_convex(m: Mesh, tol: Tolerance | None = None) -> bool:
    """True iff every vertex lies behind every triangle plane within eps."""
    if m.is_empty:
        return True
    from .core import _edge_defects

    bad_b, bad_nm = _edge_defects(m)
    if bad_b or bad_nm:
        raise InvalidMeshError("is_convex requires a closed manifold mesh")
    tol = tolerance_for(m, tol=tol)
    tc = m.triangle_coords()
    n = np.cross(tc[:, 1] - tc[:, 0], tc[:, 2] - tc[:, 0])
    norms = np.linalg.norm(n, axis=1)
    ok = norms > 0
    n = n[ok] / norms[ok][:, None]
    base = tc[ok, 0]
    offs = np.einsum("ij,ij->i", n, base)
    # max signed distance of any vertex above any plane
    d = n @ m.vertices.T - offs[:, None]
    return bool(d.max() <= tol.eps)


def _operand_vertices(x) -> np.ndarray:
    if isinstance(x, ConvexPolytope):
        return x.vertices
    if isinstance(x, Mesh):
        return x.vertices
    return np.asarray(x, dtype=float).reshape(-1, 3)


def minkowski_sum_convex(a, b) -> ConvexPolytope:
    """Exact Minkowski sum of convex operands: hull of pairwise vertex sums.

    Operands may be ConvexPolytope (possibly degenerate), meshes of convex
    solids, or raw vertex arrays of convex position.
    """
    va = _operand_vertices(a)
    vb = _operand_vertices(b)
    if len(va) == 0 or len(vb) == 0:
        raise InvalidInputError("empty Minkowski operand")
    sums = (va[:, None, :] + vb[None, :, :]).reshape(-1, 3)
    try:
        return convex_hull(sums)
    except DegenerateInputError:
        return degenerate_polytope(sums)


def minkowski_sum_general(a: Mesh, b: Mesh) -> Mesh:
    """Minkowski sum of arbitrary solids: union of pairwise convex sums over
    the convex decompositions of both operands."""
    from .decompose import convex_decompose
    from .setops import union

    for name, m in (("first", a), ("second", b)):
        rep = validate_mesh(m, check_self_intersection=False)
        if not rep.ok:
            raise InvalidMeshError(f"{name} Minkowski operand is not a valid solid", report=rep)
    parts_a = [a] if is_convex(a) else convex_decompose(a).pieces
    parts_b = [b] if is_convex(b) else convex_decompose(b).pieces
    sums = []
    for pa in parts_a:
        for pb in parts_b:
            sums.append(minkowski_sum_convex(pa, pb).to_mesh())
    if len(sums) == 1:
        return sums[0]
    return union(sums)
