"""Convex decomposition of concave solids into convex pieces.

The exact baseline is plane splitting: while a piece has a reflex edge,
cut it by the supporting plane of an adjacent face (a plane from the
finite input set, so the recursion terminates).  Splitting is exact in
the same sense as the boolean engine: cut points are rationals shared
between the side walls and the cross-section, so every piece is
watertight.  Convex cells are then fanned into tetrahedra, and
``convex_decompose`` greedily re-merges adjacent cells whenever the
merged hull adds no volume (largest contact area first) rather than
chasing a minimal decomposition, which is NP-hard.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._cdt import Triangulation, resolve_constraints, retriangulate_triangle
from .core import Mesh, Tolerance, _edge_map, mesh_volume, tolerance_for, validate_mesh, weld_mesh
from .convex import convex_hull, is_convex
from .errors import BudgetExceededError, GeometryError, InvalidMeshError
from .intersect import (
    INSIDE,
    MeshProbe,
    _add,
    _cross,
    _dot,
    _fr,
    _smul,
    _sub,
    _tri_normal_exact,
)
from .predicates import orient2d_points, orient3d_points


@dataclass(frozen=True)
class Decomposition:
    """Convex pieces partitioning a solid, with construction provenance."""

    pieces: list
    provenance: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.pieces)

    def total_volume(self) -> float:
        return float(sum(mesh_volume(p) for p in self.pieces))


def _plane_det(plane, x):
    """Exact signed determinant of x against the plane triple (a, b, c);
    positive on the outward-normal side."""
    a, b, c = plane
    return _dot(_cross(_sub(b, a), _sub(c, a)), _sub(x, a))


def split_by_plane(m: Mesh, plane_points) -> tuple[Mesh, Mesh]:
    """Split a closed solid by the plane through three points.

    Returns (below, above) closed meshes; one may be empty when the plane
    misses the solid.  'Above' is the outward-normal side of the triple.
    """
    plane = tuple(_fr(p) for p in plane_points)
    n_plane = _tri_normal_exact(plane)
    if n_plane == (0, 0, 0):
        raise GeometryError("degenerate splitting plane")

    verts = m.vertices
    signs = np.zeros(len(verts), dtype=np.int64)
    pf = np.asarray([[float(c) for c in p] for p in plane_points])
    from .predicates import orient3d_batch

    s, certain = orient3d_batch(pf[0], pf[1], pf[2], verts)
    signs[:] = s
    for i in np.nonzero(~certain)[0]:
        signs[i] = orient3d_points(plane[0], plane[1], plane[2], tuple(verts[i]))

    probe = MeshProbe(m)
    tc = m.triangle_coords()
    rats = {}

    def rat(vi):
        r = rats.get(vi)
        if r is None:
            r = _fr(verts[vi])
            rats[vi] = r
        return r

    cut_cache = {}

    def cut_point(ui, vi):
        key = (ui, vi) if ui < vi else (vi, ui)
        p = cut_cache.get(key)
        if p is None:
            a, b = rat(key[0]), rat(key[1])
            da = _plane_det(plane, a)
            db = _plane_det(plane, b)
            t = Fraction(da) / (Fraction(da) - Fraction(db))
            p = _add(a, _smul(t, _sub(b, a)))
            cut_cache[key] = p
        return p

    below = []  # rational triangle triples
    above = []
    section_pts = {}
    section_segs = set()

    def sec_pid(p):
        pid = section_pts.get(p)
        if pid is None:
            pid = len(section_pts)
            section_pts[p] = pid
        return pid

    for ti, tri in enumerate(m.triangles):
        tsigns = [int(signs[v]) for v in tri]
        tverts = [int(v) for v in tri]
        if all(s == 0 for s in tsigns):
            # face lies in the plane: it belongs to the side its solid is on
            n_f = _tri_normal_exact(tuple(rat(v) for v in tverts))
            side_dot = _dot(n_f, n_plane)
            tri3 = tuple(rat(v) for v in tverts)
            (below if side_dot > 0 else above).append(tri3)
            for k in range(3):
                section_segs.add(
                    tuple(sorted((sec_pid(rat(tverts[k])), sec_pid(rat(tverts[(k + 1) % 3])))))
                )
            continue
        if all(s >= 0 for s in tsigns):
            above.append(tuple(rat(v) for v in tverts))
            zero = [k for k in range(3) if tsigns[k] == 0]
            if len(zero) == 2:
                section_segs.add(
                    tuple(sorted((sec_pid(rat(tverts[zero[0]])), sec_pid(rat(tverts[zero[1]])))))
                )
            continue
        if all(s <= 0 for s in tsigns):
            below.append(tuple(rat(v) for v in tverts))
            zero = [k for k in range(3) if tsigns[k] == 0]
            if len(zero) == 2:
                section_segs.add(
                    tuple(sorted((sec_pid(rat(tverts[zero[0]])), sec_pid(rat(tverts[zero[1]])))))
                )
            continue

        # strict cut: gather chord points (cut points on crossing edges
        # plus any vertex exactly on the plane)
        chord = []
        pts3 = []
        for k in range(3):
            u, v = tverts[k], tverts[(k + 1) % 3]
            su, sv = tsigns[k], tsigns[(k + 1) % 3]
            if su * sv < 0:
                p = cut_point(u, v)
                pts3.append(p)
                chord.append(p)
        for k in range(3):
            if tsigns[k] == 0:
                chord.append(rat(tverts[k]))
        chord = list(dict.fromkeys(chord))
        if len(chord) != 2:
            raise GeometryError("unexpected plane-cut chord")
        cons = []
        if chord[0] in pts3 and chord[1] in pts3:
            cons = [(pts3.index(chord[0]), pts3.index(chord[1]))]
        elif pts3:
            # one endpoint is an original vertex; constrain through it by
            # adding it to the point set
            base = len(pts3)
            extra = [c for c in chord if c not in pts3]
            pts3 = pts3 + extra
            cons = [(pts3.index(chord[0]), pts3.index(chord[1]))]
        else:
            pts3 = chord
            cons = [(0, 1)]
        subs = retriangulate_triangle(tuple(map(tuple, tc[ti])), pts3, cons)
        for sub in subs:
            sval = 0
            for p in sub:
                d = _plane_det(plane, p)
                if d != 0:
                    sval = 1 if d > 0 else -1
                    break
            if sval == 0:
                raise GeometryError("zero-area piece in plane split")
            (above if sval > 0 else below).append(sub)
        section_segs.add(tuple(sorted((sec_pid(chord[0]), sec_pid(chord[1])))))

    if not section_segs:
        # plane misses the solid: everything landed on one side
        if below and above:
            raise GeometryError("disconnected split without a cross-section")
        m_below = _mesh_from_rational(below)
        m_above = _mesh_from_rational(above)
        return m_below, m_above

    interface = _triangulate_section(section_pts, section_segs, n_plane, plane, probe)
    below.extend(interface)  # oriented +n (outward for the below piece)
    above.extend([(t[0], t[2], t[1]) for t in interface])
    return _mesh_from_rational(below), _mesh_from_rational(above)


def _section_axes(n_plane):
    ax, ay, az = abs(n_plane[0]), abs(n_plane[1]), abs(n_plane[2])
    axis = 0 if (ax >= ay and ax >= az) else (1 if ay >= az else 2)
    u, v = [k for k in range(3) if k != axis]
    return axis, u, v


def _triangulate_section(section_pts, section_segs, n_plane, plane, probe) -> list:
    """Triangulate the solid cross-section region on the cutting plane,
    oriented along +plane normal."""
    axis, u, v = _section_axes(n_plane)
    pts3 = [None] * len(section_pts)
    for p, pid in section_pts.items():
        pts3[pid] = p
    pts2 = [(p[u], p[v]) for p in pts3]

    pts2r, segs2 = resolve_constraints(pts2, sorted(section_segs))
    if len(pts2r) != len(pts2):
        raise GeometryError("cross-section constraints cross; input may self-intersect")

    xs = [p[0] for p in pts2r]
    ys = [p[1] for p in pts2r]
    pad = max(max(xs) - min(xs), max(ys) - min(ys), Fraction(1)) + 1
    frame = [
        (min(xs) - pad, min(ys) - pad),
        (max(xs) + pad, min(ys) - pad),
        (max(xs) + pad, max(ys) + pad),
        (min(xs) - pad, max(ys) + pad),
    ]
    tri = Triangulation(frame)
    vids = [tri.insert_point(p) for p in pts2r]
    for (a, b) in segs2:
        tri.insert_constraint(vids[a], vids[b])

    # lift 2D points back onto the plane
    c0 = plane[0]
    offset = _dot(n_plane, c0)
    lift = {}
    for p2, p3 in zip((tuple(q) for q in ((p[u], p[v]) for p in pts3)), pts3):
        lift[(Fraction(p2[0]), Fraction(p2[1]))] = p3

    def lift2(p2):
        p3 = lift.get(p2)
        if p3 is None:
            coords = [None, None, None]
            coords[u], coords[v] = p2[0], p2[1]
            coords[axis] = (offset - n_plane[u] * p2[0] - n_plane[v] * p2[1]) / n_plane[axis]
            p3 = tuple(coords)
            lift[p2] = p3
        return p3

    # 2D orientation sign of the projection (ccw in 2D == +n in 3D?)
    flip = (1 if n_plane[axis] > 0 else -1) != _axis_parity(axis)

    out = []
    for _, (a, b, c) in tri.active_triangles():
        pa, pb, pc = tri.points[a], tri.points[b], tri.points[c]
        cx = (pa[0] + pb[0] + pc[0]) / 3
        cy = (pa[1] + pb[1] + pc[1]) / 3
        rep = lift2((cx, cy))
        if probe.classify(rep) != INSIDE:
            continue
        t3 = (lift2(pa), lift2(pb), lift2(pc))
        s = _dot(_tri_normal_exact(t3), n_plane)
        if s < 0:
            t3 = (t3[0], t3[2], t3[1])
        out.append(t3)
    return out


def _axis_parity(axis) -> int:
    # dropping x keeps (y, z): ccw 2D -> +x normal; dropping y keeps (x, z):
    # ccw 2D -> -y normal; dropping z keeps (x, y): ccw -> +z
    return 1 if axis in (0, 2) else -1


def _mesh_from_rational(tris) -> Mesh:
    if not tris:
        return Mesh.empty()
    index = {}
    verts = []
    faces = []
    for tri3 in tris:
        ids = []
        for p in tri3:
            key = (float(p[0]), float(p[1]), float(p[2]))
            vid = index.get(key)
            if vid is None:
                vid = len(verts)
                verts.append(key)
                index[key] = vid
            ids.append(vid)
        faces.append(ids)
    mesh, _w = weld_mesh(np.asarray(verts, dtype=float), np.asarray(faces, dtype=np.int64))
    return mesh


def _first_reflex_plane(m: Mesh, tol: Tolerance):
    """Plane triple of a face adjacent to the first reflex edge, or None."""
    tc = m.triangle_coords()
    edge_map = _edge_map(m)
    for key in sorted(edge_map.keys()):
        uses = edge_map[key]
        if len(uses) != 2:
            raise InvalidMeshError("decomposition requires a closed manifold mesh")
        (t1, fwd1), (t2, _fwd2) = uses
        t1, t2 = (t1, t2) if fwd1 else (t2, t1)
        tri1 = m.triangles[t1]
        apex2 = next(int(v) for v in m.triangles[t2] if int(v) not in key)
        s = orient3d_points(
            tuple(tc[t1][0]), tuple(tc[t1][1]), tuple(tc[t1][2]), tuple(m.vertices[apex2])
        )
        if s <= 0:
            continue
        # reflex by sign; ignore rounding-level dihedral noise
        n = np.cross(tc[t1][1] - tc[t1][0], tc[t1][2] - tc[t1][0])
        nn = np.linalg.norm(n)
        if nn == 0:
            continue
        dist = float(abs(np.dot(n / nn, m.vertices[apex2] - tc[t1][0])))
        if dist <= tol.eps:
            continue
        base = min(t1, t2)
        return tuple(map(tuple, tc[base])) if s > 0 else None
    return None


def convex_cells(m: Mesh, tol: Tolerance | None = None) -> list[Mesh]:
    """Partition a solid into convex cells by recursive reflex-plane splits."""
    tol = tolerance_for(m, tol=tol)
    out = []
    stack = [m]
    guard = 0
    while stack:
        piece = stack.pop()
        if piece.is_empty:
            continue
        guard += 1
        if guard > 10000:
            raise GeometryError("convex cell splitting did not terminate")
        plane = _first_reflex_plane(piece, tol)
        if plane is None:
            out.append(piece)
            continue
        below, above = split_by_plane(piece, plane)
        if below.is_empty or above.is_empty:
            # numerically flat reflex; accept the piece as-is
            out.append(piece)
            continue
        stack.append(above)
        stack.append(below)
    return out


def _fan_tetrahedra(cell: Mesh) -> list[Mesh]:
    """Tetrahedra fanned from the lexicographically smallest vertex."""
    order = np.lexsort((cell.vertices[:, 2], cell.vertices[:, 1], cell.vertices[:, 0]))
    v0 = int(order[0])
    p0 = cell.vertices[v0]
    tets = []
    for tri in cell.triangles:
        if v0 in map(int, tri):
            continue
        a, b, c = (cell.vertices[int(v)] for v in tri)
        s = orient3d_points(tuple(p0), tuple(a), tuple(b), tuple(c))
        if s == 0:
            continue
        if s < 0:
            a, b = b, a
        verts = np.stack([p0, a, b, c])
        faces = np.array([(0, 2, 1), (0, 1, 3), (1, 2, 3), (2, 0, 3)], dtype=np.int64)
        tets.append(Mesh(verts, faces))
    return tets


def tetrahedralize(m: Mesh, tol: Tolerance | None = None) -> Decomposition:
    """Exact decomposition into interior-disjoint tetrahedra.

    Piece volumes sum to mesh_volume(m) up to floating accumulation.
    """
    _require_solid(m)
    if m.is_empty:
        return Decomposition(pieces=[], provenance={"cells": []})
    cells = convex_cells(m, tol)
    pieces = []
    cell_of = []
    for ci, cell in enumerate(cells):
        for tet in _fan_tetrahedra(cell):
            pieces.append(tet)
            cell_of.append(ci)
    return Decomposition(
        pieces=pieces,
        provenance={
            "cells": cell_of,
            "cell_count": len(cells),
            "genus": _genus_of(m),
        },
    )


def convex_decompose(m: Mesh, max_pieces: int | None = None, tol: Tolerance | None = None) -> Decomposition:
    """Greedy convex decomposition: exact convex cells, then merge adjacent
    pieces (largest shared contact area first) while the merged hull adds no
    volume.  Piece count never exceeds the tetrahedron count; minimality is
    not promised.
    """
    _require_solid(m)
    if m.is_empty:
        return Decomposition(pieces=[], provenance={"cells": []})
    tol = tolerance_for(m, tol=tol)
    cells = convex_cells(m, tol)
    pieces = _merge_convex(cells, tol)
    if max_pieces is not None and len(pieces) > max_pieces:
        raise BudgetExceededError(
            f"achieved {len(pieces)} pieces, budget was {max_pieces}",
            achieved=len(pieces),
        )
    return Decomposition(
        pieces=pieces,
        provenance={"cell_count": len(cells), "genus": _genus_of(m)},
    )


def _face_key(tri_coords) -> tuple:
    pts = sorted(map(tuple, np.round(tri_coords, 12)))
    return tuple(pts)


def _contact_area(a: Mesh, b: Mesh) -> float:
    keys = {}
    tca = a.triangle_coords()
    for k in range(len(tca)):
        t = tca[k]
        keys[_face_key(t)] = 0.5 * float(np.linalg.norm(np.cross(t[1] - t[0], t[2] - t[0])))
    area = 0.0
    tcb = b.triangle_coords()
    for k in range(len(tcb)):
        key = _face_key(tcb[k])
        if key in keys:
            area += keys[key]
    return area


def _merge_convex(cells: list, tol: Tolerance) -> list:
    """Union-merge cells into groups whose joint hull adds no volume.

    Contact areas are computed once between the original cells (their
    split interfaces share exact triangles); a group's contact with
    another is the sum over member pairs, so merging never invalidates
    the contact bookkeeping.
    """
    n = len(cells)
    vols = [mesh_volume(c) for c in cells]
    base_contact = {}
    for i in range(n):
        lo_i, hi_i = cells[i].bounds()
        for j in range(i + 1, n):
            lo_j, hi_j = cells[j].bounds()
            if np.any(lo_i > hi_j + tol.eps) or np.any(hi_i < lo_j - tol.eps):
                continue
            area = _contact_area(cells[i], cells[j])
            if area > 0:
                base_contact[(i, j)] = area

    group_of = list(range(n))
    members = {g: {g} for g in range(n)}
    group_vol = dict(enumerate(vols))

    def group_contact(g1, g2):
        total = 0.0
        for a in members[g1]:
            for b in members[g2]:
                total += base_contact.get((min(a, b), max(a, b)), 0.0)
        return total

    heap = [(-area, i, j) for (i, j), area in sorted(base_contact.items())]
    heapq.heapify(heap)
    failed = set()
    while heap:
        neg_area, gi, gj = heapq.heappop(heap)
        g1 = group_of[gi] if gi < n else gi
        g2 = group_of[gj] if gj < n else gj
        g1, g2 = (g1, g2) if g1 < g2 else (g2, g1)
        if g1 == g2 or g1 not in members or g2 not in members:
            continue
        if (g1, g2) in failed:
            continue
        if -neg_area != group_contact(g1, g2):
            continue  # stale entry; a fresher one exists or was pushed
        verts = np.vstack([cells[c].vertices for c in sorted(members[g1] | members[g2])])
        hull = convex_hull(verts)
        hv = hull.volume()
        target = group_vol[g1] + group_vol[g2]
        if abs(hv - target) > 1e-9 * max(hv, target):
            failed.add((g1, g2))
            continue
        merged = members.pop(g2) | members.pop(g1)
        gid = min(merged)
        members[gid] = merged
        group_vol[gid] = hv
        for c in merged:
            group_of[c] = gid
        failed = {pair for pair in failed if gid not in pair}
        for other in sorted(members):
            if other == gid:
                continue
            area = group_contact(gid, other)
            if area > 0:
                heapq.heappush(heap, (-area, min(gid, other), max(gid, other)))

    out = []
    for gid in sorted(members):
        group = sorted(members[gid])
        if len(group) == 1:
            out.append(cells[group[0]])
        else:
            verts = np.vstack([cells[c].vertices for c in group])
            out.append(convex_hull(verts).to_mesh())
    return out


def _require_solid(m: Mesh):
    if m.is_empty:
        return
    rep = validate_mesh(m, check_self_intersection=False)
    if not rep.ok:
        raise InvalidMeshError("decomposition requires a valid closed solid", report=rep)


def _genus_of(m: Mesh) -> int:
    if m.is_empty:
        return 0
    v = len(m.vertices)
    e = len(_edge_map(m))
    f = len(m.triangles)
    chi = v - e + f
    return max(0, (2 - chi) // 2)
