import numpy as np
import pytest

from geosolid.core import Point3, Segment3, Triangle3
from geosolid.errors import InvalidInputError, InvalidMeshError, StaleTreeError
from geosolid.intersect import (
    AabbTree,
    OutcomeKind,
    build_scene_tree,
    detect_pairs,
    detect_pairs_brute,
    mesh_mesh_curve,
    point_in_body,
    segment_triangle,
    self_intersecting_pairs,
    triangle_triangle,
)
from geosolid.shapes import cube, icosphere

from oracles import sample_segment_triangle_kind, sample_triangle_triangle_kind


def _tri(a, b, c):
    return Triangle3(Point3(*a), Point3(*b), Point3(*c))


def _seg(a, b):
    return Segment3(Point3(*a), Point3(*b))


class TestPointInBody:
    def test_cube_center(self):
        assert point_in_body((0.5, 0.5, 0.5), cube()) == "inside"

    def test_outside(self):
        assert point_in_body((2.0, 0.0, 0.0), cube()) == "outside"

    def test_on_face(self):
        assert point_in_body((1.0, 0.5, 0.5), cube()) == "boundary"

    def test_on_edge_and_vertex(self):
        assert point_in_body((1.0, 1.0, 0.5), cube()) == "boundary"
        assert point_in_body((1.0, 1.0, 1.0), cube()) == "boundary"

    def test_open_mesh_rejected(self):
        from geosolid.core import Mesh

        c = cube()
        with pytest.raises(InvalidMeshError):
            point_in_body((0, 0, 0), Mesh(c.vertices, c.triangles[:-1]))

    def test_random_points_vs_sphere(self, rng):
        s = icosphere(2)
        for p in rng.normal(size=(100, 3)):
            got = point_in_body(tuple(p), s)
            r = np.linalg.norm(p)
            if r < 0.95:
                assert got == "inside"
            elif r > 1.001:
                assert got == "outside"


class TestSegmentTriangle:
    def test_pierce(self):
        out = segment_triangle(_seg((0.3, 0.3, -1), (0.3, 0.3, 1)), _tri((0, 0, 0), (1, 0, 0), (0, 1, 0)))
        assert out.kind is OutcomeKind.POINTS
        assert out.points[0] == (0.3, 0.3, 0.0)

    def test_parallel_above(self):
        out = segment_triangle(_seg((0, 0, 1), (1, 0, 1)), _tri((0, 0, 0), (1, 0, 0), (0, 1, 0)))
        assert out.kind is OutcomeKind.EMPTY

    def test_coplanar_clip(self):
        out = segment_triangle(_seg((-1.0, 0.25, 0.0), (2.0, 0.25, 0.0)), _tri((0, 0, 0), (1, 0, 0), (0, 1, 0)))
        assert out.kind is OutcomeKind.SEGMENTS
        (p, q), = out.segments
        assert p[0] == pytest.approx(0.0) and q[0] == pytest.approx(0.75)

    def test_touch_at_vertex(self):
        out = segment_triangle(_seg((0, 0, 0), (0, 0, 1)), _tri((0, 0, 0), (1, 0, 0), (0, 1, 0)))
        assert out.kind is OutcomeKind.POINTS

    def test_degenerate_triangle_rejected(self):
        with pytest.raises(InvalidInputError):
            segment_triangle(_seg((0, 0, 0), (1, 1, 1)), _tri((0, 0, 0), (1, 0, 0), (2, 0, 0)))

    def test_kind_agrees_with_sampling_oracle(self, rng):
        agree = 0
        for _ in range(300):
            seg = rng.uniform(-1, 1, size=(2, 3))
            tri = rng.uniform(-1, 1, size=(3, 3))
            got = segment_triangle(_seg(*seg), _tri(*tri)).kind.value
            want = sample_segment_triangle_kind(seg, tri)
            assert got == want
            agree += 1
        assert agree == 300


class TestTriangleTriangle:
    def test_transversal_residuals(self):
        a = _tri((0, 0, 0), (2, 0, 0), (0, 2, 0))
        b = _tri((0.5, 0.5, -1), (0.5, 0.5, 1), (1.5, 1.5, 1))
        out = triangle_triangle(a, b)
        assert out.kind is OutcomeKind.SEGMENTS
        (p, q), = out.segments
        for x in (p, q):
            assert abs(x[2]) < 1e-12  # on plane of a
            na = np.cross(np.array(b.q.as_tuple()) - b.p.as_tuple(), np.array(b.r.as_tuple()) - b.p.as_tuple())
            na = na / np.linalg.norm(na)
            assert abs(np.dot(np.array(x) - b.p.as_tuple(), na)) < 1e-12

    def test_coplanar_disjoint(self):
        a = _tri((0, 0, 0), (1, 0, 0), (0, 1, 0))
        b = _tri((5, 5, 0), (6, 5, 0), (5, 6, 0))
        assert triangle_triangle(a, b).kind is OutcomeKind.EMPTY

    def test_coplanar_overlap_polygon_area(self):
        # two unit right triangles overlapping in a known quadrilateral
        a = _tri((0, 0, 0), (2, 0, 0), (0, 2, 0))
        b = _tri((1.5, 1.5, 0), (-0.5, 1.5, 0), (1.5, -0.5, 0))
        out = triangle_triangle(a, b)
        assert out.kind is OutcomeKind.POLYGONS
        poly = np.asarray(out.polygons[0])
        x = poly[:, 0]
        y = poly[:, 1]
        area = 0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
        # hand-computed clip: band 1 <= x+y <= 2 inside A (area 1.5) minus
        # the two 0.5-leg corner triangles beyond x = 1.5 and y = 1.5
        assert area == pytest.approx(1.25)

    def test_touching_at_point(self):
        a = _tri((0, 0, 0), (1, 0, 0), (0, 1, 0))
        b = _tri((0, 0, 0), (-1, 0, 1), (0, -1, 1))
        out = triangle_triangle(a, b)
        assert out.kind is OutcomeKind.POINTS
        assert out.points[0] == (0.0, 0.0, 0.0)

    def test_kind_agrees_with_sampling_oracle(self, rng):
        for _ in range(300):
            ta = rng.uniform(-1, 1, size=(3, 3))
            tb = rng.uniform(-1, 1, size=(3, 3))
            got = triangle_triangle(_tri(*ta), _tri(*tb)).kind.value
            want = sample_triangle_triangle_kind(ta, tb)
            assert got == want


class TestMeshCurve:
    def test_offset_cubes_two_closed_squares(self, offset_cubes):
        out = mesh_mesh_curve(*offset_cubes)
        assert out.kind is OutcomeKind.SEGMENTS
        closed = [pl for pl, c in out.polylines if c]
        assert len(closed) == 2
        for pl in closed:
            pts = np.asarray(pl)
            per = sum(
                np.linalg.norm(pts[k] - pts[(k + 1) % len(pts)]) for k in range(len(pts))
            )
            assert per == pytest.approx(4.0, abs=1e-6)

    def test_disjoint_empty(self):
        assert mesh_mesh_curve(cube(), cube(origin=(5, 5, 5))).kind is OutcomeKind.EMPTY

    def test_nested_reports_volume(self):
        big = cube(4, origin=(-2, -2, -2))
        out = mesh_mesh_curve(big, cube())
        assert out.kind is OutcomeKind.VOLUME
        assert "inside" in out.note

    def test_sphere_through_cube_face(self):
        # sphere poking through z=2 face: one closed planar loop, every
        # vertex within the (inscribed) band of the true circle radius
        s = icosphere(3, radius=0.8, center=(1.0, 1.0, 2.0))
        c = cube(2.0)
        out = mesh_mesh_curve(c, s)
        closed = [pl for pl, cl in out.polylines if cl]
        assert len(closed) == 1
        pts = np.asarray(closed[0])
        assert np.max(np.abs(pts[:, 2] - 2.0)) < 1e-9
        radii = np.hypot(pts[:, 0] - 1.0, pts[:, 1] - 1.0)
        from geosolid.buffer import ball_sag

        assert radii.max() <= 0.8 + 1e-12
        assert radii.min() >= 0.8 * (1 - ball_sag(3)) - 1e-12


class TestDetectPairs:
    def test_grid_disjoint(self):
        scene = [cube(origin=(2.0 * i, 0, 0)) for i in range(10)]
        tree = build_scene_tree(scene)
        assert detect_pairs(scene, tree) == []

    def test_one_overlap(self):
        scene = [cube(origin=(2.0 * i, 0, 0)) for i in range(10)]
        scene.append(cube(origin=(4.5, 0.5, 0.5)))
        tree = build_scene_tree(scene)
        got = detect_pairs(scene, tree)
        assert got == [(2, 10)]

    def test_containment_counts(self):
        scene = [cube(4, origin=(-2, -2, -2)), cube()]
        tree = build_scene_tree(scene)
        assert detect_pairs(scene, tree) == [(0, 1)]

    def test_matches_brute_force_on_random_boxes(self, rng):
        from geosolid.shapes import box

        scene = []
        for _ in range(120):
            lo = rng.uniform(0, 10, size=3)
            size = rng.uniform(0.3, 1.2, size=3)
            scene.append(box(lo, lo + size))
        tree = build_scene_tree(scene)
        assert detect_pairs(scene, tree) == detect_pairs_brute(scene)

    def test_stale_tree_rejected(self):
        scene = [cube(), cube(origin=(3, 0, 0))]
        tree = build_scene_tree(scene)
        scene2 = [cube(), cube(origin=(4, 0, 0))]
        with pytest.raises(StaleTreeError):
            detect_pairs(scene2, tree)


class TestAabbTree:
    def test_query_box(self, rng):
        boxes = rng.uniform(0, 10, size=(200, 3))
        boxes = np.concatenate([boxes, boxes + rng.uniform(0.1, 1.0, size=(200, 3))], axis=1)
        tree = AabbTree(boxes)
        lo = np.array([2.0, 2.0, 2.0])
        hi = np.array([5.0, 5.0, 5.0])
        got = sorted(tree.query_box(lo, hi))
        want = [
            i
            for i in range(len(boxes))
            if not (np.any(boxes[i, :3] > hi) or np.any(boxes[i, 3:] < lo))
        ]
        assert got == want

    def test_parent_contains_children(self):
        tree = AabbTree(np.array([[0, 0, 0, 1, 1, 1], [2, 2, 2, 3, 3, 3], [0, 2, 0, 1, 3, 1]], dtype=float))
        for node in tree._nodes:
            if node[2] != -1:
                for child in (tree._nodes[node[2]], tree._nodes[node[3]]):
                    assert np.all(child[0] >= node[0] - 1e-15)
                    assert np.all(child[1] <= node[1] + 1e-15)


def test_self_intersection_scan_clean_and_dirty():
    assert self_intersecting_pairs(cube()) == []
    # two overlapping cubes glued into one soup self-intersect
    a, b = cube(), cube(origin=(0.5, 0.5, 0.5))
    verts = np.vstack([a.vertices, b.vertices])
    tris = np.vstack([a.triangles, b.triangles + len(a.vertices)])
    from geosolid.core import Mesh

    assert self_intersecting_pairs(Mesh(verts, tris))
