"""Exact 2D constrained triangulation.

A deliberately small engine: points are inserted into a seed triangle or
bounding frame (splitting whatever cell they land in), then constraint
segments are recovered by flipping the edges they cross.  All decisions
go through the filtered-exact predicates, and callers are expected to
pre-resolve constraint crossings / points-on-constraints with
:func:`resolve_constraints`, after which no vertex ever lies strictly
inside a constraint and the flip recovery is guaranteed to terminate.

Coordinates may be floats or Fractions (mixing is fine; predicates
promote exactly).  The triangulation itself is not Delaunay: only
validity matters to the callers, which classify or lift the output.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import GeometryError, InvalidInputError
from .predicates import orient2d_points


def _seg_key(u, v):
    return (u, v) if u <= v else (v, u)


class Triangulation:
    """Triangulation of a convex container (seed triangle or frame box)."""

    def __init__(self, corners):
        if len(corners) < 3:
            raise InvalidInputError("container needs at least 3 corners")
        self.points = []
        self._index = {}
        self.triangles = []  # [a, b, c] ccw, or None when retired
        self._edge_tri = {}  # directed edge (u, v) -> triangle index
        self.constrained = set()  # undirected vertex-id pairs
        ids = [self._add_point(p) for p in corners]
        if len(ids) == 3:
            a, b, c = ids
            if orient2d_points(self.points[a], self.points[b], self.points[c]) <= 0:
                a, b, c = a, c, b
            self._new_tri(a, b, c)
        elif len(ids) == 4:
            a, b, c, d = ids
            if orient2d_points(self.points[a], self.points[b], self.points[c]) <= 0:
                a, b, c, d = d, c, b, a
            self._new_tri(a, b, c)
            self._new_tri(a, c, d)
        else:
            raise InvalidInputError("container must be a triangle or quad")

    # -- low-level structure -------------------------------------------------

    def _add_point(self, p):
        key = (Fraction(p[0]), Fraction(p[1]))
        vid = self._index.get(key)
        if vid is None:
            vid = len(self.points)
            self.points.append(key)
            self._index[key] = vid
        return vid

    def _new_tri(self, a, b, c):
        ti = len(self.triangles)
        self.triangles.append([a, b, c])
        for u, v in ((a, b), (b, c), (c, a)):
            self._edge_tri[(u, v)] = ti
        return ti

    def _retire(self, ti):
        a, b, c = self.triangles[ti]
        for u, v in ((a, b), (b, c), (c, a)):
            if self._edge_tri.get((u, v)) == ti:
                del self._edge_tri[(u, v)]
        self.triangles[ti] = None

    def _neighbor(self, u, v):
        """Triangle containing directed edge (v, u), i.e. across edge (u, v)."""
        return self._edge_tri.get((v, u))

    # -- point insertion -----------------------------------------------------

    def insert_point(self, p) -> int:
        key = (Fraction(p[0]), Fraction(p[1]))
        vid = self._index.get(key)
        if vid is not None:
            return vid
        loc = self._locate(key)
        if loc is None:
            raise GeometryError("point lies outside the triangulation container")
        vid = self._add_point(key)
        ti, on_edge = loc
        if on_edge is None:
            self._split_interior(ti, vid)
        else:
            self._split_edge(on_edge[0], on_edge[1], vid)
        return vid

    def _locate(self, p):
        """(triangle index, on_edge or None) for the cell containing p.

        Visibility walk with a step cap, falling back to an exhaustive scan
        (the triangulations here are small; correctness beats cleverness).
        """
        start = None
        for ti in range(len(self.triangles) - 1, -1, -1):
            if self.triangles[ti] is not None:
                start = ti
                break
        if start is None:
            return None
        cap = 4 * (len(self.triangles) + 4)
        ti = start
        steps = 0
        while steps < cap:
            steps += 1
            tri = self.triangles[ti]
            a, b, c = tri
            moved = False
            zero_edge = None
            for (u, v) in ((a, b), (b, c), (c, a)):
                s = orient2d_points(self.points[u], self.points[v], p)
                if s < 0:
                    nb = self._neighbor(u, v)
                    if nb is None:
                        return self._locate_scan(p)
                    ti = nb
                    moved = True
                    break
                if s == 0:
                    zero_edge = (u, v)
            if moved:
                continue
            if zero_edge is not None:
                u, v = zero_edge
                if not self._between(self.points[u], self.points[v], p):
                    # collinear with the edge line but outside the edge: the
                    # walk landed on a sliver; rescan exhaustively.
                    return self._locate_scan(p)
                return ti, zero_edge
            return ti, None
        return self._locate_scan(p)

    def _locate_scan(self, p):
        for ti, tri in enumerate(self.triangles):
            if tri is None:
                continue
            a, b, c = tri
            s_ab = orient2d_points(self.points[a], self.points[b], p)
            s_bc = orient2d_points(self.points[b], self.points[c], p)
            s_ca = orient2d_points(self.points[c], self.points[a], p)
            if s_ab < 0 or s_bc < 0 or s_ca < 0:
                continue
            if s_ab == 0:
                return ti, (a, b)
            if s_bc == 0:
                return ti, (b, c)
            if s_ca == 0:
                return ti, (c, a)
            return ti, None
        return None

    @staticmethod
    def _between(a, b, p):
        """p strictly inside segment [a, b], all three collinear (exact)."""
        if a == b:
            return False
        lo, hi = (a, b) if a <= b else (b, a)
        return lo < p < hi

    def _split_interior(self, ti, vid):
        a, b, c = self.triangles[ti]
        self._retire(ti)
        self._new_tri(a, b, vid)
        self._new_tri(b, c, vid)
        self._new_tri(c, a, vid)

    def _split_edge(self, u, v, vid):
        t1 = self._edge_tri.get((u, v))
        t2 = self._edge_tri.get((v, u))
        constrained = _seg_key(u, v) in self.constrained
        if constrained:
            self.constrained.discard(_seg_key(u, v))
            self.constrained.add(_seg_key(u, vid))
            self.constrained.add(_seg_key(vid, v))
        for ti, (e0, e1) in ((t1, (u, v)), (t2, (v, u))):
            if ti is None:
                continue
            tri = self.triangles[ti]
            w = next(x for x in tri if x not in (e0, e1))
            self._retire(ti)
            self._new_tri(e0, vid, w)
            self._new_tri(vid, e1, w)

    # -- constraint insertion ------------------------------------------------

    def insert_constraint(self, u: int, v: int):
        """Recover segment (u, v) as an edge and mark it constrained.

        Assumes no vertex lies strictly inside the segment (callers run
        resolve_constraints first)."""
        if u == v:
            return
        if (u, v) in self._edge_tri or (v, u) in self._edge_tri:
            self.constrained.add(_seg_key(u, v))
            return
        crossing = self._edges_crossing(u, v)
        guard = 0
        cap = 1000 + 100 * (len(crossing) + 4) ** 2
        while crossing:
            guard += 1
            if guard > cap:
                raise GeometryError("constraint recovery failed to converge")
            a, b = crossing.pop(0)
            t1 = self._edge_tri.get((a, b))
            t2 = self._edge_tri.get((b, a))
            if t1 is None and t2 is None:
                continue  # edge already flipped away
            if not self._crosses(u, v, a, b):
                continue  # stale entry: an earlier flip moved it off the segment
            if _seg_key(a, b) in self.constrained:
                raise GeometryError("constraint crosses an existing constraint")
            if t1 is None or t2 is None:
                raise GeometryError("constraint escapes the container")
            c = next(x for x in self.triangles[t1] if x not in (a, b))
            d = next(x for x in self.triangles[t2] if x not in (a, b))
            pa, pb = self.points[a], self.points[b]
            pc, pd = self.points[c], self.points[d]
            # Diagonal swap is valid only for a strictly convex quad c-a-d-b.
            if orient2d_points(pc, pd, pa) * orient2d_points(pc, pd, pb) < 0 and (
                orient2d_points(pa, pb, pc) * orient2d_points(pa, pb, pd) < 0
            ):
                self._retire(t1)
                self._retire(t2)
                self._new_tri(c, a, d)
                self._new_tri(d, b, c)
                if self._crosses(u, v, c, d):
                    crossing.append((c, d))
            else:
                crossing.append((a, b))
        if (u, v) not in self._edge_tri and (v, u) not in self._edge_tri:
            raise GeometryError("constraint recovery left the segment unrepresented")
        self.constrained.add(_seg_key(u, v))

    def _edges_crossing(self, u, v):
        seen = {_seg_key(a, b) for (a, b) in self._edge_tri}
        out = []
        for (a, b) in sorted(seen):
            if u in (a, b) or v in (a, b):
                continue
            if self._crosses(u, v, a, b):
                out.append((a, b))
        return out

    def _crosses(self, u, v, a, b):
        pu, pv = self.points[u], self.points[v]
        pa, pb = self.points[a], self.points[b]
        s1 = orient2d_points(pu, pv, pa)
        s2 = orient2d_points(pu, pv, pb)
        if s1 * s2 >= 0:
            return False
        s3 = orient2d_points(pa, pb, pu)
        s4 = orient2d_points(pa, pb, pv)
        return s3 * s4 < 0

    # -- output ---------------------------------------------------------------

    def active_triangles(self):
        return [(ti, tuple(t)) for ti, t in enumerate(self.triangles) if t is not None]

    def is_constrained(self, u, v) -> bool:
        return _seg_key(u, v) in self.constrained


def resolve_constraints(points, segments):
    """Make a segment set crossing-free and vertex-conforming, exactly.

    ``points``: list of exact 2D coordinates.  ``segments``: index pairs
    into it.  Returns (points2, segments2) where points2 extends the input
    with crossing points, no two output segments cross, and no point lies
    strictly inside an output segment.  Purely combinatorial-exact; safe
    for rational coordinates.
    """
    pts = [(Fraction(p[0]), Fraction(p[1])) for p in points]
    index = {p: i for i, p in enumerate(pts)}

    def add_point(p):
        i = index.get(p)
        if i is None:
            i = len(pts)
            pts.append(p)
            index[p] = i
        return i

    segs = set()
    for (u, v) in segments:
        if u != v and pts[u] != pts[v]:
            segs.add(_seg_key(u, v))

    # pairwise proper crossings -> new points
    changed = True
    while changed:
        changed = False
        seg_list = sorted(segs)
        for i in range(len(seg_list)):
            for j in range(i + 1, len(seg_list)):
                s1, s2 = seg_list[i], seg_list[j]
                if s1 not in segs or s2 not in segs:
                    continue
                x = _proper_crossing(pts, s1, s2)
                if x is None:
                    continue
                xi = add_point(x)
                segs.discard(s1)
                segs.discard(s2)
                for (a, b) in (s1, s2):
                    if xi != a:
                        segs.add(_seg_key(a, xi))
                    if xi != b:
                        segs.add(_seg_key(xi, b))
                changed = True
                break
            if changed:
                break

    # split segments at points lying exactly on them
    final = set()
    for (a, b) in sorted(segs):
        pa, pb = pts[a], pts[b]
        on = []
        for i, p in enumerate(pts):
            if i in (a, b):
                continue
            if orient2d_points(pa, pb, p) == 0 and Triangulation._between(pa, pb, p):
                on.append(i)
        if not on:
            final.add((a, b))
            continue
        on.sort(key=lambda i: pts[i])
        lo, hi = (a, b) if pa <= pb else (b, a)
        chain = [lo] + on + [hi]
        for k in range(len(chain) - 1):
            if chain[k] != chain[k + 1]:
                final.add(_seg_key(chain[k], chain[k + 1]))
    return pts, sorted(final)


def retriangulate_triangle(corners3d, points3d, constraints, *, strict=True):
    """Conforming retriangulation of one 3D triangle.

    ``corners3d``: three exact (float or Fraction) corner triples.
    ``points3d``: list of exact points lying on the closed triangle.
    ``constraints``: index pairs into ``points3d``.

    Returns a list of rational corner triples wound like the source
    triangle.  With ``strict``, unexpected constraint crossings (which
    would break conformity with neighbouring triangles) raise.
    """
    from .predicates import exact_cross

    corners = [tuple(Fraction(c) for c in p) for p in corners3d]
    n = exact_cross(
        tuple(b - a for a, b in zip(corners[0], corners[1])),
        tuple(b - a for a, b in zip(corners[0], corners[2])),
    )
    ax, ay, az = abs(n[0]), abs(n[1]), abs(n[2])
    axis = 0 if (ax >= ay and ax >= az) else (1 if ay >= az else 2)
    u, v = [k for k in range(3) if k != axis]

    def proj(p):
        return (p[u], p[v])

    corner2 = [proj(c) for c in corners]
    flip = orient2d_points(corner2[0], corner2[1], corner2[2]) < 0

    local_pts = list(corner2)
    lift = {c2: c3 for c2, c3 in zip(corner2, corners)}
    loc_of = {}
    for idx, p3 in enumerate(points3d):
        p3 = tuple(Fraction(c) for c in p3)
        p2 = proj(p3)
        if p2 in lift:
            loc_of[idx] = local_pts.index(p2)
        else:
            lift[p2] = p3
            loc_of[idx] = len(local_pts)
            local_pts.append(p2)
    segs = sorted({_seg_key(loc_of[p], loc_of[q]) for (p, q) in constraints if loc_of[p] != loc_of[q]})

    pts2, segs2 = resolve_constraints(local_pts, segs)
    if strict and len(pts2) != len(local_pts):
        raise GeometryError(
            "constraints cross away from shared vertices; input may self-intersect"
        )
    if len(pts2) > len(local_pts):
        # lift crossing points back onto the triangle plane
        c0 = corners[0]
        offset = n[0] * Fraction(c0[0]) + n[1] * Fraction(c0[1]) + n[2] * Fraction(c0[2])
        for p2 in pts2[len(local_pts):]:
            coords = [None, None, None]
            coords[u], coords[v] = p2[0], p2[1]
            coords[axis] = (offset - n[u] * p2[0] - n[v] * p2[1]) / n[axis]
            lift[p2] = tuple(coords)
    tri = Triangulation(corner2)
    vids = [tri.insert_point(p) for p in pts2]
    for (x, y) in segs2:
        tri.insert_constraint(vids[x], vids[y])
    out = []
    for _, (a, b, c) in tri.active_triangles():
        p3 = (lift[tri.points[a]], lift[tri.points[b]], lift[tri.points[c]])
        if flip:
            p3 = (p3[0], p3[2], p3[1])
        out.append(p3)
    return out


def _det2(a, b, c):
    """Exact signed-area determinant (not just its sign)."""
    return (Fraction(b[0]) - Fraction(a[0])) * (Fraction(c[1]) - Fraction(a[1])) - (
        Fraction(b[1]) - Fraction(a[1])
    ) * (Fraction(c[0]) - Fraction(a[0]))


def _proper_crossing(pts, s1, s2):
    a, b = s1
    c, d = s2
    if len({a, b, c, d}) < 4:
        return None
    pa, pb, pc, pd = pts[a], pts[b], pts[c], pts[d]
    if orient2d_points(pa, pb, pc) * orient2d_points(pa, pb, pd) >= 0:
        return None
    d_a = _det2(pc, pd, pa)
    d_b = _det2(pc, pd, pb)
    if (d_a > 0) == (d_b > 0):
        return None
    # intersection of the two support lines, exact
    t = d_a / (d_a - d_b)
    x = (pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]))
    return x
