"""Overlay analysis of 2D attribute layers under one spatial reference.

All input region boundaries go into a single exact planar arrangement
(the shared constrained triangulation); arrangement cells are triangle
groups bounded by constraint edges.  Each cell carries the attribute
records of every input region covering it, prefixed by layer name, plus
per-layer provenance.  Reclassification dissolves same-class neighbours;
stats aggregate cells matching a predicate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._cdt import Triangulation, resolve_constraints
from .errors import ClassificationError, CRSMismatchError, InvalidInputError
from .predicates import orient2d_points


@dataclass(frozen=True)
class Polygon2:
    """Simple polygon with optional holes; shell counter-clockwise."""

    shell: tuple
    holes: tuple = ()

    def area(self) -> float:
        a = _shoelace(self.shell)
        for h in self.holes:
            a -= abs(_shoelace(h))
        return float(a)

    def rings(self):
        yield self.shell
        yield from self.holes


def _shoelace(ring) -> float:
    pts = np.asarray(ring, dtype=float)
    nxt = np.roll(pts, -1, axis=0)
    return float(0.5 * np.sum(pts[:, 0] * nxt[:, 1] - nxt[:, 0] * pts[:, 1]))


def polygon(shell, holes=()) -> Polygon2:
    """Normalize ring orientations: shell ccw, holes cw."""
    shell = [tuple(map(float, p)) for p in shell]
    if len(shell) < 3:
        raise InvalidInputError("polygon shell needs at least 3 points")
    if _shoelace(shell) < 0:
        shell = shell[::-1]
    out_holes = []
    for h in holes:
        h = [tuple(map(float, p)) for p in h]
        if len(h) < 3:
            raise InvalidInputError("polygon hole needs at least 3 points")
        if _shoelace(h) > 0:
            h = h[::-1]
        out_holes.append(tuple(h))
    return Polygon2(shell=tuple(shell), holes=tuple(out_holes))


@dataclass(frozen=True)
class Region:
    polygon: Polygon2
    attributes: dict


@dataclass(frozen=True)
class Layer:
    """Named set of interior-disjoint attributed regions in one CRS."""

    name: str
    crs_tag: str
    regions: tuple

    def __post_init__(self):
        for r in self.regions:
            names = list(r.attributes.keys())
            if len(names) != len(set(names)):
                raise InvalidInputError("duplicate attribute names in a record")


def layer(name: str, crs_tag: str, regions) -> Layer:
    regs = []
    for item in regions:
        if isinstance(item, Region):
            regs.append(item)
        else:
            poly, attrs = item
            if not isinstance(poly, Polygon2):
                poly = polygon(poly)
            regs.append(Region(polygon=poly, attributes=dict(attrs)))
    return Layer(name=name, crs_tag=crs_tag, regions=tuple(regs))


@dataclass(frozen=True)
class OverlayCell:
    polygon: Polygon2
    provenance: dict  # layer name -> region index or None
    attributes: dict
    area: float


@dataclass(frozen=True)
class OverlayResult:
    cells: tuple
    layer_names: tuple
    crs_tag: str
    # arrangement internals retained for dissolve/stats
    _points: tuple = field(repr=False, default=())
    _triangles: tuple = field(repr=False, default=())
    _cell_triangles: tuple = field(repr=False, default=())

    def total_area(self) -> float:
        return float(sum(c.area for c in self.cells))

    def to_json(self) -> dict:
        return {
            "crs_tag": self.crs_tag,
            "layers": list(self.layer_names),
            "cells": [
                {
                    "polygon": {
                        "shell": [list(p) for p in c.polygon.shell],
                        "holes": [[list(p) for p in h] for h in c.polygon.holes],
                    },
                    "area": c.area,
                    "provenance": {
                        k: (int(v) if v is not None else None) for k, v in c.provenance.items()
                    },
                    "attributes": c.attributes,
                }
                for c in self.cells
            ],
            "total_area": self.total_area(),
        }


def _point_in_polygon(p, poly: Polygon2) -> bool:
    """Exact crossing parity; points on the boundary count as inside."""
    inside = _ring_parity(p, poly.shell)
    if not inside:
        return False
    for h in poly.holes:
        if _ring_parity(p, h, on_boundary_counts=False):
            return False
    return True


def _ring_parity(p, ring, on_boundary_counts: bool = True) -> bool:
    px, py = Fraction(p[0]), Fraction(p[1])
    cnt = 0
    m = len(ring)
    for k in range(m):
        ax, ay = Fraction(ring[k][0]), Fraction(ring[k][1])
        bx, by = Fraction(ring[(k + 1) % m][0]), Fraction(ring[(k + 1) % m][1])
        if ay == by:
            if py == ay and min(ax, bx) <= px <= max(ax, bx):
                return on_boundary_counts
            continue
        if not (min(ay, by) < py <= max(ay, by)):
            continue
        # x coordinate where the edge crosses the horizontal through p
        t = (py - ay) / (by - ay)
        x = ax + t * (bx - ax)
        if x == px:
            return on_boundary_counts
        if x > px:
            cnt += 1
    return cnt % 2 == 1


def overlay(layers) -> OverlayResult:
    """Planar arrangement of two or more layers with merged attributes."""
    layers = list(layers)
    if len(layers) < 2:
        raise InvalidInputError("overlay needs at least two layers")
    names = [ly.name for ly in layers]
    if len(names) != len(set(names)):
        raise InvalidInputError("layer names must be unique")
    crs = layers[0].crs_tag
    for ly in layers[1:]:
        if ly.crs_tag != crs:
            raise CRSMismatchError(
                f"layer {ly.name!r} has crs {ly.crs_tag!r}, expected {crs!r}"
            )

    # gather all ring segments into one exact arrangement
    pts = []
    index = {}

    def pid(p):
        key = (Fraction(p[0]), Fraction(p[1]))
        i = index.get(key)
        if i is None:
            i = len(pts)
            pts.append(key)
            index[key] = i
        return i

    segs = set()
    for ly in layers:
        for ri, region in enumerate(ly.regions):
            for ring in region.polygon.rings():
                m = len(ring)
                if m < 3:
                    raise InvalidInputError(f"layer {ly.name!r} region {ri} has a short ring")
                for k in range(m):
                    a = pid(ring[k])
                    b = pid(ring[(k + 1) % m])
                    if a != b:
                        segs.add((min(a, b), max(a, b)))

    pts2, segs2 = resolve_constraints(pts, sorted(segs))

    xs = [p[0] for p in pts2]
    ys = [p[1] for p in pts2]
    pad = max(max(xs) - min(xs), max(ys) - min(ys), Fraction(1)) + 1
    frame = [
        (min(xs) - pad, min(ys) - pad),
        (max(xs) + pad, min(ys) - pad),
        (max(xs) + pad, max(ys) + pad),
        (min(xs) - pad, max(ys) + pad),
    ]
    tri = Triangulation(frame)
    vids = [tri.insert_point(p) for p in pts2]
    for (a, b) in segs2:
        tri.insert_constraint(vids[a], vids[b])

    tris = tri.active_triangles()
    tri_ids = [ti for ti, _ in tris]
    tri_verts = {ti: t for ti, t in tris}
    # adjacency across unconstrained edges
    groups = {}
    group_of = {}
    seen = set()
    for ti in sorted(tri_ids):
        if ti in seen:
            continue
        gid = len(groups)
        comp = []
        stack = [ti]
        seen.add(ti)
        while stack:
            t = stack.pop()
            comp.append(t)
            a, b, c = tri_verts[t]
            for (u, v) in ((a, b), (b, c), (c, a)):
                if tri.is_constrained(u, v):
                    continue
                nb = tri._edge_tri.get((v, u))
                if nb is not None and nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        groups[gid] = comp
        for t in comp:
            group_of[t] = gid

    cells = []
    cell_tris = []
    for gid in sorted(groups):
        comp = groups[gid]
        # representative: centroid of the largest triangle (exact)
        best = None
        best_area = -1
        for t in comp:
            a, b, c = (tri.points[v] for v in tri_verts[t])
            ar = abs(
                (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            )
            if float(ar) > best_area:
                best_area = float(ar)
                best = (a, b, c)
        rep = (
            (best[0][0] + best[1][0] + best[2][0]) / 3,
            (best[0][1] + best[1][1] + best[2][1]) / 3,
        )
        provenance = {}
        attributes = {}
        covered = False
        for ly in layers:
            hit = None
            for ri, region in enumerate(ly.regions):
                if _point_in_polygon(rep, region.polygon):
                    if hit is not None:
                        raise InvalidInputError(
                            f"layer {ly.name!r}: regions {hit} and {ri} overlap"
                        )
                    hit = ri
            provenance[ly.name] = hit
            if hit is not None:
                covered = True
                for k, v in ly.regions[hit].attributes.items():
                    attributes[f"{ly.name}.{k}"] = v
        if not covered:
            continue
        area = 0.0
        acc = Fraction(0)
        for t in comp:
            a, b, c = (tri.points[v] for v in tri_verts[t])
            acc += (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        area = float(acc / 2)
        poly = _group_polygon(tri, tri_verts, comp)
        cells.append(
            OverlayCell(polygon=poly, provenance=provenance, attributes=attributes, area=area)
        )
        cell_tris.append(tuple(sorted(comp)))

    points_out = tuple((float(p[0]), float(p[1])) for p in tri.points)
    tris_out = tuple((ti, tri_verts[ti]) for ti in sorted(tri_ids))
    return OverlayResult(
        cells=tuple(cells),
        layer_names=tuple(names),
        crs_tag=crs,
        _points=tuple(tri.points),
        _triangles=tris_out,
        _cell_triangles=tuple(cell_tris),
    )


def _group_polygon(tri, tri_verts, comp) -> Polygon2:
    """Boundary loops of a triangle group: the largest-|area| loop is the
    shell, the rest are holes."""
    comp_set = set(comp)
    nxt = {}
    for t in comp:
        a, b, c = tri_verts[t]
        for (u, v) in ((a, b), (b, c), (c, a)):
            nb = tri._edge_tri.get((v, u))
            if nb is None or nb not in comp_set:
                nxt[u] = v
    loops = []
    seen = set()
    for start in sorted(nxt):
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        cur = nxt[start]
        guard = 0
        while cur != start:
            loop.append(cur)
            seen.add(cur)
            cur = nxt[cur]
            guard += 1
            if guard > len(nxt) + 1:
                raise InvalidInputError("cell boundary tracing failed")
        loops.append(loop)
    ringed = []
    for loop in loops:
        ring = [(float(tri.points[v][0]), float(tri.points[v][1])) for v in loop]
        ringed.append((abs(_shoelace(ring)), ring))
    ringed.sort(key=lambda t: -t[0])
    shell = ringed[0][1]
    holes = [r for _a, r in ringed[1:]]
    return polygon(shell, holes)


def reclassify(result: OverlayResult, rule, default=None) -> "Layer":
    """Relabel cells via ``rule(attributes) -> label`` (None falls back to
    ``default``) and dissolve same-label neighbours into single regions."""
    labels = []
    for c in result.cells:
        label = rule(c.attributes) if callable(rule) else rule.get(_attr_key(c.attributes))
        if label is None:
            label = default
        if label is None:
            raise ClassificationError(
                f"no class for attribute combination {sorted(c.attributes.items())}",
                combination=dict(c.attributes),
            )
        labels.append(label)

    # dissolve: adjacency between cells sharing a boundary edge
    edge_cell = {}
    adj = {i: set() for i in range(len(result.cells))}
    for ci, tris in enumerate(result._cell_triangles):
        tri_set = set(tris)
        verts = dict(result._triangles)
        for t in tris:
            a, b, c = verts[t]
            for (u, v) in ((a, b), (b, c), (c, a)):
                key = (min(u, v), max(u, v))
                other = edge_cell.get(key)
                if other is None:
                    edge_cell[key] = ci
                elif other != ci:
                    adj[ci].add(other)
                    adj[other].add(ci)

    parent = list(range(len(result.cells)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(len(result.cells)):
        for j in adj[i]:
            if labels[i] == labels[j]:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    groups = {}
    for i in range(len(result.cells)):
        groups.setdefault(find(i), []).append(i)

    tri_obj = _ArrangementView(result)
    regions = []
    for root in sorted(groups):
        cells = groups[root]
        tris = sorted(t for ci in cells for t in result._cell_triangles[ci])
        poly = _group_polygon(tri_obj, dict(result._triangles), tris)
        regions.append(Region(polygon=poly, attributes={"class": labels[cells[0]]}))
    return Layer(name="reclassified", crs_tag=result.crs_tag, regions=tuple(regions))


class _ArrangementView:
    """Duck-typed stand-in exposing the arrangement bits _group_polygon needs."""

    def __init__(self, result: OverlayResult):
        self.points = list(result._points)
        self._edge_tri = {}
        for ti, (a, b, c) in result._triangles:
            for e in ((a, b), (b, c), (c, a)):
                self._edge_tri[e] = ti


def _attr_key(attributes: dict):
    return frozenset(attributes.items())


@dataclass(frozen=True)
class Stats:
    """Aggregate measures over cells matching a predicate."""

    cells: int
    area: float
    by_class: dict

    def to_json(self) -> dict:
        return {"cells": self.cells, "area": self.area, "by_class": dict(self.by_class)}


def region_stats(result: OverlayResult, predicate=None, class_of=None) -> Stats:
    """Count and measure cells matching ``predicate(attributes)``.

    ``class_of(cell)`` labels the per-class area breakdown; the default
    groups by the tuple of covering layer names.
    """
    if predicate is None:
        predicate = lambda attrs: True
    if class_of is None:
        class_of = lambda cell: tuple(
            sorted(name for name, rid in cell.provenance.items() if rid is not None)
        )
    count = 0
    area = 0.0
    by_class = {}
    for c in result.cells:
        if not predicate(c.attributes):
            continue
        count += 1
        area += c.area
        label = class_of(c)
        by_class[label] = by_class.get(label, 0.0) + c.area
    return Stats(cells=count, area=area, by_class=by_class)


def covered_by(*layer_names):
    """Attribute-predicate factory: true for cells carrying attributes from
    every named layer (keys are prefixed ``layer.attr`` by overlay)."""

    def pred(attributes):
        return all(any(k.startswith(f"{n}.") for k in attributes) for n in layer_names)

    return pred
