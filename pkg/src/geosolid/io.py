"""Mesh and data file I/O: OFF, OBJ (triangles), and the JSON schemas.

OFF is the default interchange format (exact float round-trip via
shortest-repr formatting, so identical inputs always serialize to
identical bytes).  OBJ reading ignores materials and all non-geometry
statements.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .core import Mesh, mesh_from_polygons, weld_mesh
from .errors import FileFormatError


def _fmt(x: float) -> str:
    return repr(float(x))


def save_off(mesh: Mesh, path) -> None:
    lines = ["OFF", f"{len(mesh.vertices)} {len(mesh.triangles)} 0"]
    for v in mesh.vertices:
        lines.append(f"{_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}")
    for t in mesh.triangles:
        lines.append(f"3 {t[0]} {t[1]} {t[2]}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_off(path) -> tuple[Mesh, list[str]]:
    """Parse an OFF file; polygonal faces are triangulated on ingest."""
    try:
        raw = Path(path).read_text()
    except OSError as e:
        raise FileFormatError(f"cannot read {path}: {e}") from e
    tokens = []
    for line in raw.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise FileFormatError(f"{path}: missing OFF header")
    try:
        nv, nf = int(tokens[1]), int(tokens[2])
        pos = 4
        verts = np.array(tokens[pos : pos + 3 * nv], dtype=float).reshape(nv, 3)
        pos += 3 * nv
        faces = []
        for _ in range(nf):
            k = int(tokens[pos])
            faces.append([int(i) for i in tokens[pos + 1 : pos + 1 + k]])
            pos += 1 + k
    except (ValueError, IndexError) as e:
        raise FileFormatError(f"{path}: malformed OFF body: {e}") from e
    return _assemble(verts, faces, path)


def save_obj(mesh: Mesh, path) -> None:
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}")
    for t in mesh.triangles:
        lines.append(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_obj(path) -> tuple[Mesh, list[str]]:
    try:
        raw = Path(path).read_text()
    except OSError as e:
        raise FileFormatError(f"cannot read {path}: {e}") from e
    verts = []
    faces = []
    for line in raw.splitlines():
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise FileFormatError(f"{path}: short vertex line: {line!r}")
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = []
            for tok in parts[1:]:
                tok = tok.split("/", 1)[0]
                i = int(tok)
                idx.append(i - 1 if i > 0 else len(verts) + i)
            faces.append(idx)
        # materials, normals, uvs, groups: ignored
    return _assemble(np.asarray(verts, dtype=float), faces, path)


def _assemble(verts: np.ndarray, faces, path) -> tuple[Mesh, list[str]]:
    tris = []
    poly_faces = []
    for f in faces:
        if any(i < 0 or i >= len(verts) for i in f):
            raise FileFormatError(f"{path}: face index out of range")
        if len(f) == 3:
            tris.append(f)
        elif len(f) > 3:
            poly_faces.append([verts[i] for i in f])
        else:
            raise FileFormatError(f"{path}: face with fewer than 3 vertices")
    if poly_faces:
        poly_mesh, warn = mesh_from_polygons(poly_faces)
        base = len(verts)
        verts = np.vstack([verts, poly_mesh.vertices]) if len(poly_mesh.vertices) else verts
        tris = list(tris) + [(base + a, base + b, base + c) for a, b, c in poly_mesh.triangles]
    mesh, warnings = weld_mesh(verts, np.asarray(tris, dtype=np.int64).reshape(-1, 3))
    return mesh, warnings


def load_mesh(path) -> tuple[Mesh, list[str]]:
    ext = Path(path).suffix.lower()
    if ext == ".off":
        return load_off(path)
    if ext == ".obj":
        return load_obj(path)
    raise FileFormatError(f"unsupported mesh format: {path} (use .off or .obj)")


def save_mesh(mesh: Mesh, path) -> None:
    ext = Path(path).suffix.lower()
    if ext == ".off":
        save_off(mesh, path)
    elif ext == ".obj":
        save_obj(mesh, path)
    else:
        raise FileFormatError(f"unsupported mesh format: {path} (use .off or .obj)")


def save_polytope(polytope, mesh_path, sidecar_path=None) -> None:
    """Polytope as OFF plus a JSON sidecar with the facet planes."""
    save_off(polytope.to_mesh(), mesh_path)
    if sidecar_path is None:
        sidecar_path = str(mesh_path) + ".planes.json"
    payload = {
        "facets": [
            {
                "normal": [float(c) for c in f.normal],
                "offset": float(f.offset),
                "ring": [int(i) for i in f.ring],
            }
            for f in polytope.facets
        ],
        "vertices": [[float(c) for c in v] for v in polytope.vertices],
    }
    write_json(payload, sidecar_path)


def load_points_json(path) -> np.ndarray:
    """{"points": [[x, y, z], ...]}"""
    data = read_json(path)
    pts = data.get("points")
    if pts is None:
        raise FileFormatError(f"{path}: missing 'points' key")
    arr = np.asarray(pts, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise FileFormatError(f"{path}: points must be an Nx3 array")
    return arr


def load_layer_json(path, default_name: str | None = None):
    """GeoJSON-flavoured layer: FeatureCollection with crs_tag and polygon
    features; properties become the attribute records."""
    from .overlay import layer as make_layer

    data = read_json(path)
    if data.get("type") != "FeatureCollection":
        raise FileFormatError(f"{path}: expected a FeatureCollection")
    name = data.get("name") or default_name
    if not name:
        raise FileFormatError(f"{path}: layer has no 'name' (and no default given)")
    crs = data.get("crs_tag")
    if not crs:
        raise FileFormatError(f"{path}: missing 'crs_tag'")
    regions = []
    for i, feat in enumerate(data.get("features", [])):
        geom = feat.get("geometry") or {}
        if geom.get("type") != "Polygon":
            raise FileFormatError(f"{path}: feature {i} is not a Polygon")
        coords = geom.get("coordinates") or []
        if not coords:
            raise FileFormatError(f"{path}: feature {i} has no rings")
        shell = coords[0]
        holes = coords[1:]
        # tolerate closed rings (first == last point)
        def open_ring(r):
            r = [tuple(map(float, p[:2])) for p in r]
            if len(r) > 1 and r[0] == r[-1]:
                r = r[:-1]
            return r

        from .overlay import polygon as make_polygon

        poly = make_polygon(open_ring(shell), [open_ring(h) for h in holes])
        regions.append((poly, dict(feat.get("properties") or {})))
    return make_layer(name, crs, regions)


def save_layer_json(layer_obj, path) -> None:
    features = []
    for region in layer_obj.regions:
        rings = [list(map(list, region.polygon.shell)) + [list(region.polygon.shell[0])]]
        for h in region.polygon.holes:
            rings.append(list(map(list, h)) + [list(h[0])])
        features.append(
            {
                "type": "Feature",
                "properties": dict(region.attributes),
                "geometry": {"type": "Polygon", "coordinates": rings},
            }
        )
    payload = {
        "type": "FeatureCollection",
        "name": layer_obj.name,
        "crs_tag": layer_obj.crs_tag,
        "features": features,
    }
    write_json(payload, path)


def load_scene_manifest(path):
    """Scene manifest: {"entities": [{id, kind, file|geometry, attributes}]}.

    Returns a list of entries with parsed geometry; 'body' entries load
    their mesh files relative to the manifest location.
    """
    from pathlib import Path as _P

    data = read_json(path)
    entities = data.get("entities")
    if not isinstance(entities, list) or not entities:
        raise FileFormatError(f"{path}: manifest needs a non-empty 'entities' list")
    base = _P(path).parent
    out = []
    seen_ids = set()
    for i, ent in enumerate(entities):
        eid = ent.get("id", f"entity{i}")
        if eid in seen_ids:
            raise FileFormatError(f"{path}: duplicate entity id {eid!r}")
        seen_ids.add(eid)
        kind = ent.get("kind")
        if kind not in ("point", "polyline", "face", "body"):
            raise FileFormatError(f"{path}: entity {eid!r} has unknown kind {kind!r}")
        entry = {"id": eid, "kind": kind, "attributes": dict(ent.get("attributes") or {})}
        if kind == "body":
            f = ent.get("file")
            if not f:
                raise FileFormatError(f"{path}: body entity {eid!r} needs a 'file'")
            mesh, warn = load_mesh(base / f)
            entry["mesh"] = mesh
            entry["warnings"] = warn
        else:
            geom = ent.get("geometry") or {}
            pts = geom.get("points") or ([geom["point"]] if "point" in geom else None)
            if not pts:
                raise FileFormatError(f"{path}: entity {eid!r} needs geometry points")
            entry["points"] = [tuple(map(float, p)) for p in pts]
        out.append(entry)
    return out


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as e:
        raise FileFormatError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise FileFormatError(f"{path}: invalid JSON: {e}") from e


def write_json(payload, path) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file + rename so failures leave no partial output."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
