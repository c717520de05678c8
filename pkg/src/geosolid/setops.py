"""Regularized boolean set operations on solid bodies.

The pipeline: find intersecting triangle pairs through the AABB trees,
construct the exact intersection curve (rational points shared globally,
so both surfaces conform to identical coordinates), retriangulate every
cut face with the curve as constraints, classify each piece against the
other solid by exact ray parity, then select pieces per operation.
Regularized semantics: measure-zero contacts (touching faces, edges,
vertices) never produce dangling geometry; coincident face patches are
kept once (the first operand's copy) where the operation demands them.
"""

from __future__ import annotations

from enum import Enum
from fractions import Fraction

import numpy as np

from ._cdt import retriangulate_triangle
from .core import Mesh, _edge_map, validate_mesh, weld_mesh
from .errors import GeometryError, InvalidInputError, InvalidMeshError
from .intersect import (
    BOUNDARY,
    INSIDE,
    MeshProbe,
    _add,
    _clip_line_to_tri,
    _cross,
    _dot,
    _fr,
    _smul,
    _sub,
    _tri_normal_exact,
    _tri_pair_exact,
    candidate_tri_pairs,
)

_IN = "in"
_OUT = "out"
_ON_SAME = "on_same"
_ON_OPP = "on_opp"


class BooleanKind(Enum):
    UNION = "union"
    MEET = "meet"
    DIFFERENCE = "difference"
    SYMMETRIC_DIFFERENCE = "symmetric_difference"


# Which (side, label) pieces each boolean keeps, whether they flip, and the
# output lobe they belong to.  The symmetric difference is two solids (a \ b
# and b \ a) whose closures touch along the intersection curve; welding the
# lobes separately keeps each shell a 2-manifold instead of pinching them.
_RULES = {
    BooleanKind.UNION: (("A", _OUT, False, 0), ("A", _ON_SAME, False, 0), ("B", _OUT, False, 0)),
    BooleanKind.MEET: (("A", _IN, False, 0), ("A", _ON_SAME, False, 0), ("B", _IN, False, 0)),
    BooleanKind.DIFFERENCE: (("A", _OUT, False, 0), ("A", _ON_OPP, False, 0), ("B", _IN, True, 0)),
    BooleanKind.SYMMETRIC_DIFFERENCE: (
        ("A", _OUT, False, 0),
        ("B", _IN, True, 0),
        ("B", _OUT, False, 1),
        ("A", _IN, True, 1),
    ),
}


class _Registry:
    """Canonical exact intersection points, shared by both operands."""

    def __init__(self):
        self.points = []
        self._index = {}

    def register(self, p) -> int:
        key = (Fraction(p[0]), Fraction(p[1]), Fraction(p[2]))
        pid = self._index.get(key)
        if pid is None:
            pid = len(self.points)
            self.points.append(key)
            self._index[key] = pid
        return pid


class _Side:
    """One boolean operand: its probe plus per-triangle cut bookkeeping."""

    def __init__(self, mesh: Mesh, tag: str):
        self.mesh = mesh
        self.tag = tag
        self.probe = MeshProbe(mesh)
        self.tc = mesh.triangle_coords()
        self.points = {}  # tid -> set of pids
        self.constraints = {}  # tid -> set of (pid, pid)
        self.involved = set()
        self._normals = {}

    def mark(self, tid: int):
        self.involved.add(tid)
        self.points.setdefault(tid, set())
        self.constraints.setdefault(tid, set())

    def add_point(self, tid: int, pid: int):
        self.mark(tid)
        self.points[tid].add(pid)

    def add_constraint(self, tid: int, p: int, q: int):
        if p == q:
            self.add_point(tid, p)
            return
        self.mark(tid)
        self.points[tid].update((p, q))
        self.constraints[tid].add((p, q) if p < q else (q, p))

    def normal(self, tid: int):
        n = self._normals.get(tid)
        if n is None:
            tri = tuple(_fr(p) for p in self.tc[tid])
            n = _tri_normal_exact(tri)
            self._normals[tid] = n
        return n

    def rational_tri(self, tid: int):
        return self.probe.rational_tri(tid)


def _clip_segment_coplanar(a, b, tri, n):
    """Clip rational in-plane segment [a, b] to the closed triangle.

    Returns None, ("point", p) or ("segment", p, q)."""
    d = _sub(b, a)
    if d == (0, 0, 0):
        return None
    iv = _clip_line_to_tri(a, d, tri, n)
    if iv is None:
        return None
    lo = max(iv[0], Fraction(0))
    hi = min(iv[1], Fraction(1))
    if lo > hi:
        return None
    pa = _add(a, _smul(lo, d))
    if lo == hi:
        return ("point", pa)
    return ("segment", pa, _add(a, _smul(hi, d)))


def _cut_pass(side_a: _Side, side_b: _Side, reg: _Registry):
    """Intersect all candidate triangle pairs; record points/constraints."""
    pairs = sorted(candidate_tri_pairs(side_a.mesh, side_b.mesh, side_a.probe.tree, side_b.probe.tree))
    for i, j in pairs:
        tri_a = tuple(map(tuple, side_a.tc[i]))
        tri_b = tuple(map(tuple, side_b.tc[j]))
        res = _tri_pair_exact(tri_a, tri_b)
        if res[0] == "none":
            continue
        if res[0] == "point":
            pid = reg.register(res[1])
            side_a.add_point(i, pid)
            side_b.add_point(j, pid)
        elif res[0] == "segment":
            p = reg.register(res[1])
            q = reg.register(res[2])
            side_a.add_constraint(i, p, q)
            side_b.add_constraint(j, p, q)
        else:  # coplanar overlap: constrain each triangle with the other's edges
            ra = side_a.rational_tri(i)
            rb = side_b.rational_tri(j)
            na = side_a.normal(i)
            nb = side_b.normal(j)
            overlapped = False
            for k in range(3):
                clip = _clip_segment_coplanar(rb[k], rb[(k + 1) % 3], ra, na)
                if clip is None:
                    continue
                overlapped = True
                if clip[0] == "point":
                    side_a.add_point(i, reg.register(clip[1]))
                else:
                    side_a.add_constraint(i, reg.register(clip[1]), reg.register(clip[2]))
            for k in range(3):
                clip = _clip_segment_coplanar(ra[k], ra[(k + 1) % 3], rb, nb)
                if clip is None:
                    continue
                overlapped = True
                if clip[0] == "point":
                    side_b.add_point(j, reg.register(clip[1]))
                else:
                    side_b.add_constraint(j, reg.register(clip[1]), reg.register(clip[2]))
            if not overlapped:
                # coplanar but disjoint, or one triangle strictly inside the
                # other with no edge contact: containment still cuts
                if _tri_inside_tri(ra, rb, na):
                    for k in range(3):
                        side_b.add_point(j, reg.register(ra[k]))
                    side_a.mark(i)
                elif _tri_inside_tri(rb, ra, nb):
                    for k in range(3):
                        side_a.add_point(i, reg.register(rb[k]))
                    side_b.mark(j)


def _tri_inside_tri(inner, outer, n_outer) -> bool:
    from .intersect import _point_on_tri

    return all(_point_on_tri(p, outer, n_outer) for p in inner)


def _scatter(reg: _Registry, sides):
    """Attach every canonical point to every triangle it lies on exactly,
    in both meshes; this is what makes neighboring retriangulations agree."""
    from .intersect import _point_on_tri

    for pid, p in enumerate(reg.points):
        pf = np.array([float(c) for c in p])
        for side in sides:
            lo = pf - side.probe.pad
            hi = pf + side.probe.pad
            for tid in side.probe.tree.query_box(lo, hi):
                if _point_on_tri(p, side.rational_tri(tid), side.normal(tid)):
                    side.add_point(tid, pid)


def _build_subtris(side: _Side, reg: _Registry):
    """Retriangulate every involved triangle; returns a list of
    (rational corner triple, source tid) in source orientation."""
    out = []
    for tid in sorted(side.involved):
        pids = sorted(side.points.get(tid, ()))
        local = {pid: k for k, pid in enumerate(pids)}
        pts3 = [reg.points[pid] for pid in pids]
        cons = [(local[p], local[q]) for (p, q) in sorted(side.constraints.get(tid, ()))]
        for tri3 in retriangulate_triangle(tuple(map(tuple, side.tc[tid])), pts3, cons):
            out.append((tri3, tid))
    return out


def _classify_cut(side: _Side, other: _Side, subtris):
    """Label each cut piece against the other solid."""
    labeled = []
    for tri3, tid in subtris:
        cx = (tri3[0][0] + tri3[1][0] + tri3[2][0]) / 3
        cy = (tri3[0][1] + tri3[1][1] + tri3[2][1]) / 3
        cz = (tri3[0][2] + tri3[1][2] + tri3[2][2]) / 3
        rep = (cx, cy, cz)
        rep_f = (float(cx), float(cy), float(cz))
        cls = other.probe.classify(rep, rep_f)
        if cls == BOUNDARY:
            oti = other.probe.on_boundary(rep, rep_f)
            s = _dot(side.normal(tid), other.normal(oti))
            if s == 0:
                raise GeometryError("coincident face patch with perpendicular normals")
            label = _ON_SAME if s > 0 else _ON_OPP
        elif cls == INSIDE:
            label = _IN
        else:
            label = _OUT
        labeled.append((tri3, label))
    return labeled


def _classify_uncut(side: _Side, other: _Side):
    """Flood-fill classification of triangles the cut never touched."""
    mesh = side.mesh
    uninvolved = [t for t in range(len(mesh.triangles)) if t not in side.involved]
    if not uninvolved:
        return []
    edge_map = _edge_map(mesh)
    adj = {t: [] for t in uninvolved}
    uncut = set(uninvolved)
    for uses in edge_map.values():
        if len(uses) == 2:
            t1, t2 = uses[0][0], uses[1][0]
            if t1 in uncut and t2 in uncut:
                adj[t1].append(t2)
                adj[t2].append(t1)
    labeled = []
    seen = set()
    for seed in uninvolved:
        if seed in seen:
            continue
        region = [seed]
        seen.add(seed)
        stack = [seed]
        while stack:
            t = stack.pop()
            for nb in adj[t]:
                if nb not in seen:
                    seen.add(nb)
                    region.append(nb)
                    stack.append(nb)
        tc = side.tc[seed]
        rep = (
            Fraction(float(tc[0][0])) / 3 + Fraction(float(tc[1][0])) / 3 + Fraction(float(tc[2][0])) / 3,
            Fraction(float(tc[0][1])) / 3 + Fraction(float(tc[1][1])) / 3 + Fraction(float(tc[2][1])) / 3,
            Fraction(float(tc[0][2])) / 3 + Fraction(float(tc[1][2])) / 3 + Fraction(float(tc[2][2])) / 3,
        )
        cls = other.probe.classify(rep)
        if cls == BOUNDARY:
            raise GeometryError("untouched face classified on boundary; cut pass incomplete")
        label = _IN if cls == INSIDE else _OUT
        for t in region:
            tri3 = tuple(tuple(Fraction(c) for c in p) for p in side.tc[t])
            labeled.append((tri3, label))
    return labeled


def _boolean_pair(a: Mesh, b: Mesh, kind: BooleanKind) -> Mesh:
    if a.is_empty or b.is_empty:
        if kind is BooleanKind.UNION:
            return b if a.is_empty else a
        if kind is BooleanKind.MEET:
            return Mesh.empty()
        if kind is BooleanKind.DIFFERENCE:
            return Mesh.empty() if a.is_empty else a
        return b if a.is_empty else a  # symmetric difference

    side_a = _Side(a, "A")
    side_b = _Side(b, "B")
    reg = _Registry()
    _cut_pass(side_a, side_b, reg)
    _scatter(reg, (side_a, side_b))

    pieces = {"A": [], "B": []}
    for side, other, tag in ((side_a, side_b, "A"), (side_b, side_a, "B")):
        subs = _build_subtris(side, reg)
        pieces[tag].extend(_classify_cut(side, other, subs))
        pieces[tag].extend(_classify_uncut(side, other))

    lobes = {}
    for side_tag, label, flipped, lobe in _RULES[kind]:
        for tri3, lab in pieces[side_tag]:
            if lab != label:
                continue
            lobes.setdefault(lobe, []).append((tri3[0], tri3[2], tri3[1]) if flipped else tri3)

    return _emit(lobes)


def _emit(lobes: dict) -> Mesh:
    """Weld each lobe separately, then concatenate; lobes may share
    coordinates (touching shells) but never vertex indices."""
    all_verts = []
    all_faces = []
    for lobe in sorted(lobes):
        tris = lobes[lobe]
        if not tris:
            continue
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
        mesh, _warn = weld_mesh(np.asarray(verts, dtype=float), np.asarray(faces, dtype=np.int64))
        base = sum(len(v) for v in all_verts)
        all_verts.append(mesh.vertices)
        all_faces.append(mesh.triangles + base)
    if not all_faces:
        return Mesh.empty()
    return Mesh(np.vstack(all_verts), np.vstack(all_faces))


def _check_operand(m: Mesh, label: str):
    if m.is_empty:
        return
    report = validate_mesh(m, check_self_intersection=False)
    if not report.ok:
        raise InvalidMeshError(
            f"{label} is not a valid solid "
            f"(closed={report.closed}, orientable={report.orientable}, "
            f"manifold={report.manifold}, positive_volume={report.positive_volume})",
            report=report,
        )


def union(entities) -> Mesh:
    """Regularized union of one or more solids (left-to-right reduction)."""
    ms = list(entities)
    if not ms:
        raise InvalidInputError("union needs at least one entity")
    for i, m in enumerate(ms):
        _check_operand(m, f"entity {i}")
    acc = ms[0]
    for m in ms[1:]:
        acc = _boolean_pair(acc, m, BooleanKind.UNION)
    return acc


def meet(entities) -> Mesh:
    """Regularized intersection; the empty solid is a legal result."""
    ms = list(entities)
    if not ms:
        raise InvalidInputError("meet needs at least one entity")
    for i, m in enumerate(ms):
        _check_operand(m, f"entity {i}")
    acc = ms[0]
    for m in ms[1:]:
        acc = _boolean_pair(acc, m, BooleanKind.MEET)
    return acc


def difference(a: Mesh, b: Mesh) -> Mesh:
    """Regularized a minus b."""
    _check_operand(a, "first entity")
    _check_operand(b, "second entity")
    return _boolean_pair(a, b, BooleanKind.DIFFERENCE)


def symmetric_difference(a: Mesh, b: Mesh) -> Mesh:
    """Regularized (a \\ b) union (b \\ a)."""
    _check_operand(a, "first entity")
    _check_operand(b, "second entity")
    return _boolean_pair(a, b, BooleanKind.SYMMETRIC_DIFFERENCE)


def apply_boolean(kind: BooleanKind, entities) -> Mesh:
    ms = list(entities)
    if kind is BooleanKind.UNION:
        return union(ms)
    if kind is BooleanKind.MEET:
        return meet(ms)
    if len(ms) != 2:
        raise InvalidInputError(f"{kind.value} takes exactly two entities")
    if kind is BooleanKind.DIFFERENCE:
        return difference(ms[0], ms[1])
    return symmetric_difference(ms[0], ms[1])
