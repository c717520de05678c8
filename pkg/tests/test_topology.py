import numpy as np
import pytest

from geosolid.errors import InvalidInputError, UnknownIdError
from geosolid.shapes import icosphere, torus
from geosolid.topology import (
    RelationGroup,
    build_topology,
    check_transposes,
    euler_check,
    model_from_json,
    relation,
)


def cube_quads(origin=(0, 0, 0)):
    o = np.asarray(origin, dtype=float)

    def q(*pts):
        return [tuple(o + np.asarray(p, dtype=float)) for p in pts]

    return [
        q((0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 0, 0)),
        q((0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)),
        q((0, 0, 0), (1, 0, 0), (1, 0, 1), (0, 0, 1)),
        q((0, 1, 0), (0, 1, 1), (1, 1, 1), (1, 1, 0)),
        q((1, 0, 0), (1, 1, 0), (1, 1, 1), (1, 0, 1)),
        q((0, 0, 0), (0, 0, 1), (0, 1, 1), (0, 1, 0)),
    ]


@pytest.fixture
def cube_model():
    return build_topology(cube_quads())


@pytest.fixture
def double_cube_model():
    return build_topology(cube_quads() + cube_quads(origin=(1, 0, 0)))


class TestCensus:
    def test_cube(self, cube_model):
        assert cube_model.census() == {
            "nodes": 8,
            "arcs": 12,
            "rings": 6,
            "faces": 6,
            "bodies": 1,
            "features": 1,
        }

    def test_double_cube(self, double_cube_model):
        c = double_cube_model.census()
        assert c["nodes"] == 12
        assert c["arcs"] == 20
        assert c["faces"] == 11
        assert c["bodies"] == 2

    def test_shared_face_body_degree(self, double_cube_model):
        fb = relation(double_cube_model, RelationGroup.BODY_FACE)
        degrees = [len(fb.inverse_of(f)) for f in range(11)]
        assert sorted(degrees).count(2) == 1
        assert max(degrees) == 2

    def test_through_hole_face_rings(self):
        outer = [(0, 0), (4, 0), (4, 4), (0, 4)]
        inner = [(1, 1), (3, 1), (3, 3), (1, 3)]

        def ring3(r, z, rev=False):
            pts = [(x, y, float(z)) for (x, y) in r]
            return pts[::-1] if rev else pts

        faces = [
            [ring3(outer, 0, rev=True), ring3(inner, 0)],
            [ring3(outer, 1), ring3(inner, 1, rev=True)],
        ]
        for k in range(4):
            a, b = outer[k], outer[(k + 1) % 4]
            faces.append([(a[0], a[1], 0.0), (b[0], b[1], 0.0), (b[0], b[1], 1.0), (a[0], a[1], 1.0)])
        for k in range(4):
            a, b = inner[k], inner[(k + 1) % 4]
            faces.append([(b[0], b[1], 0.0), (a[0], a[1], 0.0), (a[0], a[1], 1.0), (b[0], b[1], 1.0)])
        m = build_topology(faces)
        rings_per_face = sorted(len(f) for f in m.faces)
        assert rings_per_face.count(2) == 2
        assert len(m.bodies) == 1


class TestRelations:
    def test_cube_queries(self, cube_model):
        m = cube_model
        assert len(relation(m, RelationGroup.BODY_FACE).of(0)) == 6
        for arc in range(12):
            assert len(relation(m, RelationGroup.ARC_NODE).of(arc)) == 2
        # every cube corner joins exactly 3 arcs
        for node in range(8):
            assert len(relation(m, RelationGroup.NODE_ARC).of(node)) == 3
        assert len(relation(m, RelationGroup.FACE_RING).of(0)) == 1
        assert len(relation(m, RelationGroup.FEATURE_BODY).of(0)) == 1

    def test_string_group_lookup(self, cube_model):
        assert relation(cube_model, "arc_node").of(0)

    def test_unknown_id(self, cube_model):
        with pytest.raises(UnknownIdError):
            relation(cube_model, RelationGroup.BODY_FACE).of(99)

    def test_transposes(self, cube_model, double_cube_model):
        assert check_transposes(cube_model)
        assert check_transposes(double_cube_model)


class TestEuler:
    def test_cube(self, cube_model):
        e = euler_check(cube_model, 0)
        assert (e["V"], e["E"], e["F"]) == (8, 12, 6)
        assert e["characteristic"] == 2
        assert e["genus"] == 0

    def test_torus(self):
        t = torus(n_major=12, n_minor=8)
        faces = [[tuple(t.vertices[v]) for v in tri] for tri in t.triangles]
        m = build_topology(faces)
        e = euler_check(m, 0)
        assert e["characteristic"] == 0
        assert e["genus"] == 1

    @pytest.mark.parametrize("lod", [1, 2])
    def test_icosphere_characteristic(self, lod):
        s = icosphere(lod)
        faces = [[tuple(s.vertices[v]) for v in tri] for tri in s.triangles]
        m = build_topology(faces)
        assert euler_check(m, 0)["characteristic"] == 2

    def test_unknown_body(self, cube_model):
        with pytest.raises(UnknownIdError):
            euler_check(cube_model, 5)


class TestInvariantsAndRebuild:
    def test_ring_count_vs_face_count(self, double_cube_model):
        m = double_cube_model
        assert sum(len(f) for f in m.faces) >= len(m.faces)
        assert sum(len(f) for f in m.faces) == len(m.faces)  # no holes here

    def test_rebuild_idempotent(self, double_cube_model):
        m2 = build_topology(double_cube_model.face_polygons())
        assert m2.census() == double_cube_model.census()
        assert check_transposes(m2)

    def test_json_round_trip(self, double_cube_model):
        m2 = model_from_json(double_cube_model.to_json())
        assert m2.census() == double_cube_model.census()
        assert euler_check(m2, 0) == euler_check(double_cube_model, 0)


class TestErrors:
    def test_open_shell_lists_boundary(self):
        with pytest.raises(InvalidInputError, match="boundary edge"):
            build_topology(cube_quads()[:-1])

    def test_weld_ambiguity(self):
        # a chain of nearly-coincident corners: consecutive gaps are within
        # eps but the cluster spans more than 2 * eps
        eps = 0.5
        faces = [cube_quads(origin=(0.45 * i, 0, 0))[0] for i in range(4)]
        with pytest.raises(InvalidInputError, match="ambiguous|collapses"):
            build_topology(faces, weld_eps=eps)

    def test_duplicate_face_dedup(self):
        faces = cube_quads() + [cube_quads()[0]]
        m = build_topology(faces)
        assert len(m.faces) == 6
