"""Batch command-line front-end: every analysis as a command over files.

Commands: hull | buffer | boolean | overlay | decompose | topology |
minkowski | intersect | validate.  Outputs are OFF/OBJ meshes and JSON
reports; geometric outputs are validated before being written, runs are
deterministic (identical inputs and flags produce byte-identical
outputs), and every error path maps to a documented exit code:

  0  success
  2  usage error (unknown command or flags)
  3  unreadable or unparseable input file
  4  invalid geometry (open/non-manifold mesh, bad polygon, CRS mismatch)
  5  parameter out of range
  6  degenerate input (e.g. coplanar hull points)
  7  operation failure (budget exceeded, classification gap, ...)

The default tolerance may be overridden by GEOSOLID_EPS; flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io as gio
from .core import Mesh, Tolerance, mesh_area, mesh_volume, validate_mesh
from .errors import (
    BudgetExceededError,
    ClassificationError,
    CRSMismatchError,
    DegenerateInputError,
    FileFormatError,
    GeometryError,
    InvalidInputError,
    InvalidMeshError,
    ParameterError,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INVALID_GEOMETRY = 4
EXIT_PARAMETER = 5
EXIT_DEGENERATE = 6
EXIT_OPERATION = 7


def _exit_code_for(exc: Exception) -> int:
    if isinstance(exc, (FileFormatError, OSError)):
        return EXIT_IO
    if isinstance(exc, ParameterError):
        return EXIT_PARAMETER
    if isinstance(exc, DegenerateInputError):
        return EXIT_DEGENERATE
    if isinstance(exc, (InvalidMeshError, InvalidInputError, CRSMismatchError)):
        return EXIT_INVALID_GEOMETRY
    if isinstance(exc, GeometryError):
        return EXIT_OPERATION
    raise exc


def _tolerance_from(args) -> Tolerance | None:
    eps = args.eps
    if eps is None:
        env = os.environ.get("GEOSOLID_EPS")
        if env:
            eps = float(env)
    if eps is None:
        return None
    return Tolerance(eps=eps, angular_eps=args.angular_eps or 1e-9)


class _Run:
    """Collects the run report while a command executes."""

    def __init__(self, args, argv):
        self.args = args
        self.report = {
            "command": "geosolid " + " ".join(argv),
            "subcommand": args.command,
            "parameters": {},
            "inputs": [],
            "outputs": [],
            "warnings": [],
            "tolerance": None,
        }
        self.t0 = time.perf_counter()

    def param(self, **kwargs):
        self.report["parameters"].update(kwargs)

    def input_file(self, path):
        self.report["inputs"].append({"path": str(path), "sha256": gio.file_digest(path)})

    def warn(self, messages):
        self.report["warnings"].extend(messages)

    def load_mesh(self, path) -> Mesh:
        mesh, warnings = gio.load_mesh(path)
        self.input_file(path)
        self.warn(warnings)
        return mesh

    def write_mesh(self, mesh: Mesh, path, check_self_intersection=True):
        rep = validate_mesh(mesh, check_self_intersection=check_self_intersection)
        if not rep.ok:
            raise InvalidMeshError(
                f"refusing to write invalid geometry to {path}", report=rep
            )
        gio.save_mesh(mesh, path)
        written, _ = gio.load_mesh(path)
        self.report["outputs"].append(
            {
                "path": str(path),
                "metrics": {
                    "vertices": int(len(written.vertices)),
                    "triangles": int(len(written.triangles)),
                    "volume": mesh_volume(written) if not written.is_empty else 0.0,
                    "area": mesh_area(written),
                },
            }
        )

    def write_json(self, payload, path, metrics=None):
        gio.write_json(payload, path)
        self.report["outputs"].append({"path": str(path), "metrics": metrics or {}})

    def finish(self):
        self.report["timing_seconds"] = time.perf_counter() - self.t0
        dest = self.args.report
        if dest:
            gio.write_json(self.report, dest)


def _cmd_validate(run, args):
    mesh = run.load_mesh(args.mesh)
    rep = validate_mesh(mesh, check_self_intersection=not args.no_self_check)
    payload = rep.to_json()
    if args.output:
        run.write_json(payload, args.output, metrics={"ok": rep.ok})
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK if rep.ok else EXIT_INVALID_GEOMETRY


def _cmd_hull(run, args):
    from .convex import convex_hull

    src = Path(args.input)
    if src.suffix.lower() == ".json":
        pts = gio.load_points_json(src)
        run.input_file(src)
    else:
        pts = run.load_mesh(src).vertices
    run.param(points=int(len(pts)))
    poly = convex_hull(pts, tol=_tolerance_from(args))
    run.write_mesh(poly.to_mesh(), args.output)
    if args.planes:
        gio.save_polytope(poly, args.output, args.planes)
        run.report["outputs"].append({"path": str(args.planes), "metrics": {"facets": len(poly.facets)}})
    return EXIT_OK


def _cmd_boolean(run, args):
    from .setops import BooleanKind, apply_boolean

    kind = BooleanKind(args.op)
    meshes = [run.load_mesh(p) for p in args.inputs]
    run.param(op=args.op, inputs=len(meshes))
    out = apply_boolean(kind, meshes)
    run.write_mesh(out, args.output)
    return EXIT_OK


def _cmd_buffer(run, args):
    from .buffer import BufferParams, buffer_body, buffer_face, buffer_point, buffer_polyline
    from .core import Segment3

    params = BufferParams(distance=args.distance, sphere_lod=args.lod)
    run.param(distance=args.distance, lod=args.lod)
    src = Path(args.input)
    if src.suffix.lower() == ".json":
        entries = gio.load_scene_manifest(src)
        run.input_file(src)
        if len(entries) != 1:
            raise InvalidInputError("buffer expects exactly one entity in the manifest")
        ent = entries[0]
        kind = ent["kind"]
        if kind == "point":
            out = buffer_point(ent["points"][0], params)
        elif kind == "polyline":
            pts = ent["points"]
            if len(pts) < 2:
                raise InvalidInputError("polyline needs at least two points")
            segs = [Segment3(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]
            out = buffer_polyline(segs, params)
        elif kind == "face":
            out = buffer_face(ent["points"], params)
        else:
            out = buffer_body(ent["mesh"], params)
    else:
        out = buffer_body(run.load_mesh(src), params)
    run.write_mesh(out, args.output, check_self_intersection=not args.no_self_check)
    return EXIT_OK


def _cmd_minkowski(run, args):
    from .convex import minkowski_sum_general

    a = run.load_mesh(args.a)
    b = run.load_mesh(args.b)
    out = minkowski_sum_general(a, b)
    run.write_mesh(out, args.output, check_self_intersection=not args.no_self_check)
    return EXIT_OK


def _cmd_decompose(run, args):
    from .decompose import convex_decompose, tetrahedralize

    mesh = run.load_mesh(args.input)
    run.param(tets=bool(args.tets), max_pieces=args.max_pieces)
    if args.tets:
        dec = tetrahedralize(mesh, tol=_tolerance_from(args))
    else:
        dec = convex_decompose(mesh, max_pieces=args.max_pieces, tol=_tolerance_from(args))
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    piece_files = []
    for i, piece in enumerate(dec.pieces):
        path = outdir / f"piece_{i:04d}.off"
        run.write_mesh(piece, path, check_self_intersection=False)
        piece_files.append(path.name)
    manifest = {
        "pieces": piece_files,
        "count": dec.count,
        "total_volume": dec.total_volume(),
        "provenance": {
            k: (list(map(int, v)) if isinstance(v, (list, tuple)) else v)
            for k, v in dec.provenance.items()
        },
    }
    run.write_json(manifest, outdir / "decomposition.json", metrics={"pieces": dec.count})
    return EXIT_OK


def _cmd_topology(run, args):
    from .topology import build_topology, check_transposes, euler_check

    mesh = run.load_mesh(args.input)
    faces = [[tuple(mesh.vertices[v]) for v in tri] for tri in mesh.triangles]
    model = build_topology(faces, tol=_tolerance_from(args))
    payload = model.to_json()
    payload["transpose_ok"] = check_transposes(model)
    payload["euler"] = [euler_check(model, b) for b in range(len(model.bodies))]
    if args.output:
        run.write_json(payload, args.output, metrics=model.census())
    print(json.dumps({"census": model.census(), "euler": payload["euler"]}, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_intersect(run, args):
    from .intersect import OutcomeKind, build_scene_tree, detect_pairs, mesh_mesh_curve

    if args.scene:
        entries = gio.load_scene_manifest(args.scene)
        run.input_file(args.scene)
        meshes = []
        ids = []
        for ent in entries:
            if ent["kind"] != "body":
                raise InvalidInputError("scene intersection expects body entities")
            meshes.append(ent["mesh"])
            ids.append(ent["id"])
        tree = build_scene_tree(meshes)
        pairs = detect_pairs(meshes, tree)
        payload = {"pairs": [[ids[i], ids[j]] for (i, j) in pairs]}
        if args.output:
            run.write_json(payload, args.output, metrics={"pairs": len(pairs)})
        print(json.dumps(payload, sort_keys=True))
        return EXIT_OK
    a = run.load_mesh(args.a)
    b = run.load_mesh(args.b)
    out = mesh_mesh_curve(a, b)
    payload = {
        "kind": out.kind.value,
        "points": [list(p) for p in out.points],
        "polylines": [
            {"points": [list(p) for p in pl], "closed": closed} for (pl, closed) in out.polylines
        ],
        "polygons": [[list(p) for p in poly] for poly in out.polygons],
        "note": out.note,
    }
    if args.output:
        run.write_json(payload, args.output, metrics={"kind": out.kind.value})
    print(json.dumps({"kind": out.kind.value, "polylines": len(out.polylines)}, sort_keys=True))
    return EXIT_OK


def _cmd_overlay(run, args):
    from .overlay import overlay, reclassify, region_stats

    layers = []
    for i, path in enumerate(args.layers):
        ly = gio.load_layer_json(path, default_name=f"layer{i}")
        run.input_file(path)
        layers.append(ly)
    result = overlay(layers)
    run.param(layers=[ly.name for ly in layers])
    run.write_json(result.to_json(), args.output, metrics={"cells": len(result.cells)})
    if args.reclass_rules:
        rules = gio.read_json(args.reclass_rules)
        run.input_file(args.reclass_rules)

        def rule(attrs):
            for entry in rules.get("rules", []):
                where = entry.get("where", {})
                if all(attrs.get(k) == v for k, v in where.items()):
                    return entry.get("class")
            return rules.get("default")

        layer_out = reclassify(result, rule)
        out_path = Path(args.output).with_suffix(".reclassified.json")
        gio.save_layer_json(layer_out, out_path)
        run.report["outputs"].append(
            {"path": str(out_path), "metrics": {"regions": len(layer_out.regions)}}
        )
    if args.stats:
        st = region_stats(result)
        stats_payload = {
            "cells": st.cells,
            "area": st.area,
            "by_class": {"+".join(k): v for k, v in sorted(st.by_class.items())},
        }
        out_path = Path(args.output).with_suffix(".stats.json")
        run.write_json(stats_payload, out_path, metrics={"cells": st.cells})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="geosolid",
        description="3D spatial-analysis toolkit: booleans, buffers, hulls, "
        "Minkowski sums, decomposition, topology, intersection, overlay.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eps", type=float, default=None, help="absolute geometric tolerance")
    common.add_argument(
        "--angular-eps", type=float, default=None, help="angular tolerance (radians)"
    )
    common.add_argument("--report", default=None, help="write a JSON run report here")
    sub = p.add_subparsers(dest="command", required=True, parser_class=argparse.ArgumentParser)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    s = add_parser("validate", help="validate a solid mesh")
    s.add_argument("mesh")
    s.add_argument("-o", "--output", default=None, help="write the report JSON here")
    s.add_argument("--no-self-check", action="store_true", help="skip self-intersection scan")

    s = add_parser("hull", help="3D convex hull of points or mesh vertices")
    s.add_argument("input", help="points JSON ({'points': [[x,y,z],...]}) or mesh file")
    s.add_argument("-o", "--output", required=True, help="output mesh (.off/.obj)")
    s.add_argument("--planes", default=None, help="write facet-plane sidecar JSON here")

    s = add_parser("boolean", help="regularized set operation on solids")
    s.add_argument(
        "--op",
        required=True,
        choices=["union", "meet", "difference", "symmetric_difference"],
    )
    s.add_argument("inputs", nargs="+", help="input meshes")
    s.add_argument("-o", "--output", required=True)

    s = add_parser("buffer", help="buffer a point/polyline/face/body by a distance")
    s.add_argument("input", help="mesh file (body) or entity manifest JSON")
    s.add_argument("--distance", type=float, required=True)
    s.add_argument("--lod", type=int, default=3, help="ball subdivision level (1-6)")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--no-self-check", action="store_true")

    s = add_parser("minkowski", help="Minkowski sum of two solids")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--no-self-check", action="store_true")

    s = add_parser("decompose", help="convex decomposition into pieces")
    s.add_argument("input")
    s.add_argument("-o", "--output-dir", required=True)
    s.add_argument("--max-pieces", type=int, default=None)
    s.add_argument("--tets", action="store_true", help="emit raw tetrahedra")

    s = add_parser("topology", help="build the B-rep topology model")
    s.add_argument("input")
    s.add_argument("-o", "--output", default=None, help="write the full census JSON here")

    s = add_parser("intersect", help="intersection curve of two solids, or scene pairs")
    s.add_argument("a", nargs="?")
    s.add_argument("b", nargs="?")
    s.add_argument("--scene", default=None, help="scene manifest JSON for pair detection")
    s.add_argument("-o", "--output", default=None)

    s = add_parser("overlay", help="overlay attribute layers")
    s.add_argument("layers", nargs="+", help="layer JSON files (>= 2)")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--reclass-rules", default=None, help="JSON rules for reclassification")
    s.add_argument("--stats", action="store_true", help="also write region stats")
    return p


_HANDLERS = {
    "validate": _cmd_validate,
    "hull": _cmd_hull,
    "boolean": _cmd_boolean,
    "buffer": _cmd_buffer,
    "minkowski": _cmd_minkowski,
    "decompose": _cmd_decompose,
    "topology": _cmd_topology,
    "intersect": _cmd_intersect,
    "overlay": _cmd_overlay,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_USAGE
    if args.command == "intersect" and not args.scene and not (args.a and args.b):
        _emit_error(InvalidInputError("intersect needs two meshes or --scene"), EXIT_USAGE)
        return EXIT_USAGE
    run = _Run(args, argv)
    try:
        code = _HANDLERS[args.command](run, args)
    except Exception as exc:  # noqa: BLE001 - mapped to documented exit codes
        code = _exit_code_for(exc)
        _emit_error(exc, code)
        return code
    run.finish()
    return code


def _emit_error(exc: Exception, code: int) -> None:
    detail = {}
    if isinstance(exc, InvalidMeshError) and exc.report is not None:
        detail = exc.report.to_json()
    if isinstance(exc, DegenerateInputError):
        detail = {"affine_dim": exc.affine_dim}
    if isinstance(exc, BudgetExceededError):
        detail = {"achieved": exc.achieved}
    if isinstance(exc, ClassificationError):
        detail = {"combination": exc.combination}
    payload = {
        "error": {
            "type": type(exc).__name__,
            "message": str(exc),
            "exit_code": code,
            "detail": detail,
        }
    }
    print(json.dumps(payload, sort_keys=True, default=str), file=sys.stderr)


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
