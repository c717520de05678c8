"""Boundary-representation topology: nodes, arcs, rings, faces, bodies,
and complex features, with explicit bidirectional incidence maps.

Bodies are recovered from a polygon soup by the radial cell construction:
faces are sorted angularly around every edge, consecutive face sides are
glued into cells, and each bounded cell becomes a body.  A face shared by
two adjacent bodies is stored once and carries both body references.
All six relation groups are materialized as forward plus inverse tables,
so relation queries are O(1) lookups rather than traversals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import Tolerance, _newell_normal
from .errors import InvalidInputError, UnknownIdError


class RelationGroup(Enum):
    FEATURE_BODY = "feature_body"
    BODY_FACE = "body_face"
    FACE_RING = "face_ring"
    RING_ARC = "ring_arc"
    ARC_NODE = "arc_node"
    NODE_ARC = "node_arc"


@dataclass(frozen=True)
class Relation:
    """One relation group as forward/inverse lookup tables."""

    group: RelationGroup
    forward: dict
    inverse: dict

    def of(self, element_id: int):
        if element_id not in self.forward:
            raise UnknownIdError(f"{self.group.value}: unknown id {element_id}")
        return self.forward[element_id]

    def inverse_of(self, element_id: int):
        if element_id not in self.inverse:
            raise UnknownIdError(f"{self.group.value}: unknown inverse id {element_id}")
        return self.inverse[element_id]


@dataclass(frozen=True)
class TopologyModel:
    """Element tables plus the six bidirectional relation groups."""

    nodes: np.ndarray  # (n, 3) welded coordinates
    arcs: tuple  # arc id -> tuple of node ids (chain; closed if first == last)
    rings: tuple  # ring id -> tuple of (arc id, forward?) in cycle order
    faces: tuple  # face id -> tuple of ring ids (outer first)
    bodies: tuple  # body id -> tuple of (face id, +1|-1 orientation)
    features: tuple  # feature id -> tuple of body ids
    relations: dict = field(default_factory=dict)
    ring_nodes: tuple = ()  # ring id -> node cycle (derived, for export)

    def census(self) -> dict:
        return {
            "nodes": len(self.nodes),
            "arcs": len(self.arcs),
            "rings": len(self.rings),
            "faces": len(self.faces),
            "bodies": len(self.bodies),
            "features": len(self.features),
        }

    def face_polygons(self):
        """Faces as lists of ring point lists (outer first), for rebuilds."""
        out = []
        for rings in self.faces:
            face = []
            for rid in rings:
                cycle = self.ring_nodes[rid]
                face.append([tuple(self.nodes[n]) for n in cycle])
            out.append(face)
        return out

    def to_json(self) -> dict:
        return {
            "nodes": [[float(c) for c in p] for p in self.nodes],
            "arcs": [list(map(int, a)) for a in self.arcs],
            "rings": [[[int(a), bool(f)] for (a, f) in r] for r in self.rings],
            "faces": [list(map(int, f)) for f in self.faces],
            "bodies": [[[int(f), int(s)] for (f, s) in b] for b in self.bodies],
            "features": [list(map(int, f)) for f in self.features],
            "census": self.census(),
        }


def _normalize_face(face):
    """Accept a bare ring or a list of rings; return list of (n, 3) arrays."""
    first = face[0]
    try:
        np.asarray(first, dtype=float).reshape(3)
        rings = [face]
    except (TypeError, ValueError):
        rings = list(face)
    out = []
    for ring in rings:
        r = np.asarray(ring, dtype=float).reshape(-1, 3)
        if len(r) < 3:
            raise InvalidInputError("face ring needs at least 3 points")
        out.append(r)
    return out


def _weld(points: np.ndarray, eps: float) -> np.ndarray:
    """Map each point to a cluster id; clusters wider than 2*eps are
    ambiguous and rejected."""
    n = len(points)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def join(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    cell = {}
    inv = 1.0 / eps if eps > 0 else 0.0
    keys = np.floor(points * inv).astype(np.int64)
    for i in range(n):
        cell.setdefault(tuple(keys[i]), []).append(i)
    for i in range(n):
        kx, ky, kz = keys[i]
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    for j in cell.get((kx + dx, ky + dy, kz + dz), ()):
                        if j > i and np.linalg.norm(points[i] - points[j]) <= eps:
                            join(i, j)
    cluster = np.array([find(i) for i in range(n)], dtype=np.int64)
    for root in np.unique(cluster):
        members = points[cluster == root]
        span = np.linalg.norm(members.max(axis=0) - members.min(axis=0))
        if span > 2 * eps:
            raise InvalidInputError(
                f"vertex welding is ambiguous: cluster spans {span:.3g} > 2*eps"
            )
    return cluster


def build_topology(faces, weld_eps: float | None = None, tol: Tolerance | None = None) -> TopologyModel:
    """Build the full topology model from polygonal faces.

    ``faces``: list of faces, each a point ring or a list of rings (outer
    ring first, then holes).  Duplicate faces (same welded ring cycles)
    are stored once; bodies are the bounded cells of the face complex and
    features its connected components.
    """
    face_rings = [_normalize_face(f) for f in faces]
    pts = np.vstack([r for f in face_rings for r in f])
    if weld_eps is None:
        span = np.linalg.norm(pts.max(axis=0) - pts.min(axis=0))
        weld_eps = (tol.eps if tol is not None else 1e-9 * max(span, 1.0))
    cluster = _weld(pts, weld_eps)

    # node table: first occurrence per cluster, in input order
    node_of_cluster = {}
    node_coords = []
    pos = 0
    welded_faces = []
    for f in face_rings:
        rings = []
        for r in f:
            ids = []
            for _p in r:
                c = int(cluster[pos])
                nid = node_of_cluster.get(c)
                if nid is None:
                    nid = len(node_coords)
                    node_of_cluster[c] = nid
                    node_coords.append(pts[pos])
                pos += 1
                ids.append(nid)
            dedup = [ids[k] for k in range(len(ids)) if ids[k] != ids[k - 1]]
            if len(dedup) >= 2 and dedup[0] == dedup[-1]:
                dedup.pop()
            if len(set(dedup)) < 3:
                raise InvalidInputError("face ring collapses under welding")
            rings.append(dedup)
        welded_faces.append(rings)
    nodes = np.asarray(node_coords, dtype=float)

    # dedup faces by canonical ring signatures
    def ring_sig(cycle):
        best = None
        for seq in (cycle, cycle[::-1]):
            for s in range(len(seq)):
                rot = tuple(seq[s:] + seq[:s])
                if best is None or rot < best:
                    best = rot
        return best

    face_ids = {}
    faces_nodes = []  # face id -> list of node cycles
    for rings in welded_faces:
        sig = tuple(sorted(ring_sig(r) for r in rings))
        if sig not in face_ids:
            face_ids[sig] = len(faces_nodes)
            faces_nodes.append(rings)

    # edge graph
    edge_set = set()
    for rings in faces_nodes:
        for cycle in rings:
            m = len(cycle)
            for k in range(m):
                u, v = cycle[k], cycle[(k + 1) % m]
                if u != v:
                    edge_set.add((min(u, v), max(u, v)))

    degree = {}
    for (u, v) in edge_set:
        degree[u] = degree.get(u, 0) + 1
        degree[v] = degree.get(v, 0) + 1

    # arcs: maximal chains through degree-2 nodes
    arc_of_edge = {}
    arcs = []
    neighbors = {}
    for (u, v) in sorted(edge_set):
        neighbors.setdefault(u, []).append(v)
        neighbors.setdefault(v, []).append(u)
    for v in neighbors:
        neighbors[v].sort()

    def edge_key(u, v):
        return (min(u, v), max(u, v))

    for start in sorted(neighbors):
        if degree[start] == 2:
            continue
        for nxt in neighbors[start]:
            if edge_key(start, nxt) in arc_of_edge:
                continue
            chain = [start, nxt]
            arc_of_edge[edge_key(start, nxt)] = len(arcs)
            while degree[chain[-1]] == 2:
                a, b = neighbors[chain[-1]]
                nxt2 = b if a == chain[-2] else a
                arc_of_edge[edge_key(chain[-1], nxt2)] = len(arcs)
                chain.append(nxt2)
            arcs.append(tuple(chain))
    # leftover pure cycles (every node degree 2)
    for (u, v) in sorted(edge_set):
        if edge_key(u, v) in arc_of_edge:
            continue
        chain = [u, v]
        arc_of_edge[edge_key(u, v)] = len(arcs)
        while chain[-1] != chain[0]:
            a, b = neighbors[chain[-1]]
            nxt2 = b if a == chain[-2] else a
            arc_of_edge[edge_key(chain[-1], nxt2)] = len(arcs)
            chain.append(nxt2)
        arcs.append(tuple(chain))

    # rings: decompose each node cycle into maximal same-arc runs
    rings = []
    ring_nodes = []
    face_ring_ids = []
    for rings_of_face in faces_nodes:
        ids = []
        for cycle in rings_of_face:
            m = len(cycle)
            cycle_edges = [(cycle[k], cycle[(k + 1) % m]) for k in range(m)]
            arc_ids = [arc_of_edge[edge_key(u, v)] for (u, v) in cycle_edges]
            runs = []
            for k in range(m):
                if runs and arc_ids[k] == runs[-1][0]:
                    runs[-1][1].append(cycle_edges[k])
                else:
                    runs.append([arc_ids[k], [cycle_edges[k]]])
            if len(runs) > 1 and runs[0][0] == runs[-1][0]:
                runs[0][1] = runs[-1][1] + runs[0][1]
                runs.pop()
            seq = []
            for aid, run_edges in runs:
                u, v = run_edges[0]
                chain = arcs[aid]
                if chain[0] == chain[-1]:
                    i0 = chain[:-1].index(u)
                    fwd = chain[i0 + 1] == v
                else:
                    iu = chain.index(u)
                    fwd = iu + 1 < len(chain) and chain[iu + 1] == v
                seq.append((aid, fwd))
            rid = len(rings)
            rings.append(tuple(seq))
            ring_nodes.append(tuple(cycle))
            ids.append(rid)
        face_ring_ids.append(tuple(ids))

    bodies = _assemble_bodies(nodes, faces_nodes, face_ring_ids)

    # features: connected components of bodies over shared faces
    face_bodies = {}
    for bid, bfaces in enumerate(bodies):
        for fid, _s in bfaces:
            face_bodies.setdefault(fid, []).append(bid)
    parent = list(range(len(bodies)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for fid, bs in face_bodies.items():
        for k in range(1, len(bs)):
            ra, rb = find(bs[0]), find(bs[k])
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    comp = {}
    for b in range(len(bodies)):
        comp.setdefault(find(b), []).append(b)
    features = tuple(tuple(sorted(v)) for _k, v in sorted(comp.items()))

    model = TopologyModel(
        nodes=nodes,
        arcs=tuple(arcs),
        rings=tuple(rings),
        faces=tuple(face_ring_ids),
        bodies=tuple(bodies),
        features=features,
        ring_nodes=tuple(ring_nodes),
    )
    object.__setattr__(model, "relations", _build_relations(model))
    return model


def _assemble_bodies(nodes, faces_nodes, face_ring_ids):
    """Radial cell construction; returns body -> tuple of (face, side)."""
    # incidences: edge -> list of (face id, walks u->v?) with u < v
    incid = {}
    for fid, rings_of_face in enumerate(faces_nodes):
        for cycle in rings_of_face:
            m = len(cycle)
            for k in range(m):
                u, v = cycle[k], cycle[(k + 1) % m]
                key = (min(u, v), max(u, v))
                incid.setdefault(key, []).append((fid, u < v))

    normals = []
    for fid, rings_of_face in enumerate(faces_nodes):
        n = _newell_normal(nodes[rings_of_face[0]])
        nn = np.linalg.norm(n)
        if nn == 0:
            raise InvalidInputError(f"face {fid} is degenerate")
        normals.append(n / nn)

    open_edges = [key for key, uses in incid.items() if len(uses) == 1]
    if open_edges:
        raise InvalidInputError(
            f"faces do not form closed shells; {len(open_edges)} boundary edge(s), "
            f"e.g. nodes {open_edges[:5]}"
        )

    # half-face union-find: (fid, +1) is the side the face normal points to
    hf_parent = {}

    def hf_find(x):
        while hf_parent.setdefault(x, x) != x:
            hf_parent[x] = hf_parent[hf_parent[x]]
            x = hf_parent[x]
        return x

    def hf_join(a, b):
        ra, rb = hf_find(a), hf_find(b)
        if ra != rb:
            hf_parent[max(ra, rb)] = min(ra, rb)

    for (u, v), uses in sorted(incid.items()):
        e = nodes[v] - nodes[u]
        e = e / np.linalg.norm(e)
        # orthonormal basis perpendicular to the edge
        ref = np.array([1.0, 0.0, 0.0]) if abs(e[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        b1 = np.cross(e, ref)
        b1 /= np.linalg.norm(b1)
        b2 = np.cross(e, b1)
        entries = []
        for (fid, forward) in uses:
            n_f = normals[fid]
            walk = e if forward else -e
            d_f = np.cross(n_f, walk)
            norm = np.linalg.norm(d_f)
            if norm == 0:
                raise InvalidInputError(f"face {fid} contains its own edge direction")
            d_f = d_f / norm
            theta = math.atan2(float(d_f @ b2), float(d_f @ b1))
            # +n side sits at theta + 90 deg for a forward walk, -90 otherwise
            entries.append((theta, fid, 1 if forward else -1))
        entries.sort()
        for k in range(1, len(entries)):
            if abs(entries[k][0] - entries[k - 1][0]) < 1e-12:
                raise InvalidInputError(
                    f"overlapping coplanar faces {entries[k-1][1]} and {entries[k][1]} at an edge"
                )
        m = len(entries)
        for k in range(m):
            th_i, f_i, w_i = entries[k]
            th_j, f_j, w_j = entries[(k + 1) % m]
            # side of f_i facing the wedge above it (normal at th_i + 90):
            side_i = w_i
            # side of f_j facing the wedge below it (normal at th_j - 90):
            side_j = -w_j
            hf_join((f_i, side_i), (f_j, side_j))

    comps = {}
    for fid in range(len(faces_nodes)):
        for s in (1, -1):
            comps.setdefault(hf_find((fid, s)), []).append((fid, s))

    bodies = []
    for root in sorted(comps):
        half_faces = comps[root]
        vol6 = 0.0
        for (fid, s) in half_faces:
            for cycle in faces_nodes[fid]:
                ring_pts = nodes[list(cycle)]
                for k in range(1, len(ring_pts) - 1):
                    vol6 += s * float(
                        np.dot(ring_pts[0], np.cross(ring_pts[k], ring_pts[k + 1]))
                    )
        # half-face normals point into the cell, so bounded cells sum negative
        if vol6 < 0:
            bodies.append(tuple(sorted((fid, -s) for (fid, s) in half_faces)))
    return tuple(bodies)


def _build_relations(model: TopologyModel) -> dict:
    feature_body = {i: tuple(b) for i, b in enumerate(model.features)}
    body_feature = {}
    for i, bs in feature_body.items():
        for b in bs:
            body_feature[b] = (i,)

    body_face = {i: tuple(f for (f, _s) in b) for i, b in enumerate(model.bodies)}
    face_body = {f: () for f in range(len(model.faces))}
    for b, fs in body_face.items():
        for f in fs:
            face_body[f] = tuple(sorted(set(face_body[f]) | {b}))

    face_ring = {i: tuple(r) for i, r in enumerate(model.faces)}
    ring_face = {}
    for f, rs in face_ring.items():
        for r in rs:
            ring_face[r] = (f,)

    ring_arc = {i: tuple(a for (a, _fwd) in r) for i, r in enumerate(model.rings)}
    arc_ring = {a: () for a in range(len(model.arcs))}
    for r, arcs in ring_arc.items():
        for a in arcs:
            arc_ring[a] = tuple(sorted(set(arc_ring[a]) | {r}))

    arc_node = {i: tuple(chain) for i, chain in enumerate(model.arcs)}
    node_arc = {n: () for n in range(len(model.nodes))}
    for a, chain in arc_node.items():
        for n in set(chain):
            node_arc[n] = tuple(sorted(set(node_arc[n]) | {a}))

    return {
        RelationGroup.FEATURE_BODY: Relation(RelationGroup.FEATURE_BODY, feature_body, body_feature),
        RelationGroup.BODY_FACE: Relation(RelationGroup.BODY_FACE, body_face, face_body),
        RelationGroup.FACE_RING: Relation(RelationGroup.FACE_RING, face_ring, ring_face),
        RelationGroup.RING_ARC: Relation(RelationGroup.RING_ARC, ring_arc, arc_ring),
        RelationGroup.ARC_NODE: Relation(RelationGroup.ARC_NODE, arc_node, node_arc),
        RelationGroup.NODE_ARC: Relation(RelationGroup.NODE_ARC, node_arc, arc_node),
    }


def relation(model: TopologyModel, group: RelationGroup | str) -> Relation:
    """Queryable map for one of the six relation groups."""
    if isinstance(group, str):
        try:
            group = RelationGroup(group)
        except ValueError as e:
            raise UnknownIdError(f"unknown relation group: {group}") from e
    return model.relations[group]


def check_transposes(model: TopologyModel) -> bool:
    """Every incidence map must be the exact transpose of its inverse."""
    for rel in model.relations.values():
        for k, vals in rel.forward.items():
            for v in vals:
                if k not in rel.inverse.get(v, ()):
                    return False
        for k, vals in rel.inverse.items():
            for v in vals:
                if k not in rel.forward.get(v, ()):
                    return False
    return True


def euler_check(model: TopologyModel, body_id: int) -> dict:
    """V - E + F over a body's shell; characteristic 2 - 2g for genus g."""
    if not (0 <= body_id < len(model.bodies)):
        raise UnknownIdError(f"unknown body id {body_id}")
    fids = [f for (f, _s) in model.bodies[body_id]]
    node_ids = set()
    edges = set()
    for fid in fids:
        for rid in model.faces[fid]:
            cycle = model.ring_nodes[rid]
            m = len(cycle)
            for k in range(m):
                u, v = cycle[k], cycle[(k + 1) % m]
                node_ids.add(u)
                edges.add((min(u, v), max(u, v)))
    v = len(node_ids)
    e = len(edges)
    f = len(fids)
    chi = v - e + f
    return {
        "V": v,
        "E": e,
        "F": f,
        "characteristic": chi,
        "genus": (2 - chi) // 2,
    }


def model_from_json(payload: dict) -> TopologyModel:
    model = TopologyModel(
        nodes=np.asarray(payload["nodes"], dtype=float),
        arcs=tuple(tuple(a) for a in payload["arcs"]),
        rings=tuple(tuple((int(a), bool(f)) for (a, f) in r) for r in payload["rings"]),
        faces=tuple(tuple(f) for f in payload["faces"]),
        bodies=tuple(tuple((int(f), int(s)) for (f, s) in b) for b in payload["bodies"]),
        features=tuple(tuple(f) for f in payload["features"]),
        ring_nodes=tuple(),
    )
    ring_nodes = []
    for r in model.rings:
        chain = []
        for (aid, fwd) in r:
            seq = list(model.arcs[aid]) if fwd else list(reversed(model.arcs[aid]))
            if chain:
                seq = seq[1:]
            chain.extend(seq)
        if chain and chain[0] == chain[-1]:
            chain.pop()
        ring_nodes.append(tuple(chain))
    object.__setattr__(model, "ring_nodes", tuple(ring_nodes))
    object.__setattr__(model, "relations", _build_relations(model))
    return model
