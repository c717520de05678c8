import math

import numpy as np
import pytest

from geosolid.buffer import BufferParams, ball_sag, buffer_body, buffer_face, buffer_point, buffer_polyline
from geosolid.core import Point3, Segment3, mesh_volume, validate_mesh
from geosolid.errors import InvalidInputError, ParameterError
from geosolid.intersect import point_in_body
from geosolid.shapes import cube, icosphere

BALL = 4 * math.pi / 3


def test_params_validation():
    with pytest.raises(ParameterError):
        BufferParams(distance=0.0)
    with pytest.raises(ParameterError):
        BufferParams(distance=1.0, sphere_lod=0)
    with pytest.raises(ParameterError):
        BufferParams(distance=1.0, sphere_lod=7)


class TestPointBuffer:
    def test_volume_within_2_percent_of_ball(self):
        b = buffer_point((0, 0, 0), BufferParams(1.0, 3))
        v = mesh_volume(b)
        assert v < BALL
        assert abs(v - BALL) / BALL < 0.02

    def test_translation_equivariance(self):
        b0 = buffer_point((0, 0, 0), BufferParams(1.0, 2))
        b1 = buffer_point((5, 5, 5), BufferParams(1.0, 2))
        assert np.allclose(b1.vertices - (5, 5, 5), b0.vertices)

    def test_lod_monotonicity_inscribed(self):
        v1 = mesh_volume(buffer_point((0, 0, 0), BufferParams(1.0, 1)))
        v4 = mesh_volume(buffer_point((0, 0, 0), BufferParams(1.0, 4)))
        assert v1 < v4 < BALL

    def test_vertices_exactly_at_distance(self):
        b = buffer_point((1, 2, 3), BufferParams(0.7, 3))
        r = np.linalg.norm(b.vertices - (1, 2, 3), axis=1)
        assert np.max(np.abs(r - 0.7)) < 1e-12


class TestPolylineBuffer:
    def test_capsule_volume(self):
        cap = buffer_polyline([Segment3(Point3(0, 0, 0), Point3(2, 0, 0))], BufferParams(0.5, 3))
        analytic = math.pi * 0.25 * 2 + 4 * math.pi * 0.125 / 3
        v = mesh_volume(cap)
        assert v < analytic
        assert abs(v - analytic) / analytic < 0.03

    def test_collinear_segments_merge(self):
        p = BufferParams(0.5, 2)
        two = buffer_polyline(
            [Segment3(Point3(0, 0, 0), Point3(1, 0, 0)), Segment3(Point3(1, 0, 0), Point3(2, 0, 0))], p
        )
        one = buffer_polyline([Segment3(Point3(0, 0, 0), Point3(2, 0, 0))], p)
        assert mesh_volume(two) == pytest.approx(mesh_volume(one), rel=1e-6)

    def test_l_shape_subadditive(self):
        p = BufferParams(0.4, 2)
        lshape = buffer_polyline(
            [Segment3(Point3(0, 0, 0), Point3(1, 0, 0)), Segment3(Point3(1, 0, 0), Point3(1, 1, 0))], p
        )
        single = mesh_volume(buffer_polyline([Segment3(Point3(0, 0, 0), Point3(1, 0, 0))], p))
        assert mesh_volume(lshape) < 2 * single
        assert validate_mesh(lshape, check_self_intersection=False).ok


class TestFaceBuffer:
    def test_unit_square_steiner(self):
        # Steiner expansion of a unit square: slab + half-cylinder rim +
        # sphere corners = 2R + 4*(pi R^2/2) + 4pi R^3/3 = 0.267021...
        R = 0.1
        out = buffer_face([(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)], BufferParams(R, 2))
        steiner = 2 * R + 4 * math.pi * R * R / 2 + 4 * math.pi * R**3 / 3
        v = mesh_volume(out)
        assert v < steiner
        assert abs(v - steiner) / steiner < 0.03

    def test_slab_limit_small_r(self):
        R = 0.001
        out = buffer_face([(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)], BufferParams(R, 2))
        assert mesh_volume(out) == pytest.approx(2 * R, rel=0.05)

    def test_translated_square_congruent(self):
        p = BufferParams(0.1, 2)
        a = buffer_face([(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)], p)
        b = buffer_face([(3, 4, 5), (4, 4, 5), (4, 5, 5), (3, 5, 5)], p)
        assert mesh_volume(a) == pytest.approx(mesh_volume(b), rel=1e-9)
        assert len(a.triangles) == len(b.triangles)

    def test_nonplanar_rejected(self):
        with pytest.raises(InvalidInputError):
            buffer_face([(0, 0, 0), (1, 0, 0), (1, 1, 0.3), (0, 1, 0)], BufferParams(0.1, 2))


class TestBodyBuffer:
    def test_sphere_r_plus_big_r_law(self):
        # the r + R law: buffering the radius-1 ball by R = 0.5 gives the
        # radius-1.5 ball (inscribed)
        out = buffer_body(icosphere(3), BufferParams(0.5, 3))
        target = 4 * math.pi * 1.5**3 / 3
        v = mesh_volume(out)
        assert abs(v - target) / target < 0.03
        r = np.linalg.norm(out.vertices, axis=1)
        assert r.max() <= 1.5 + 1e-9
        assert r.min() >= 1.5 * (1 - ball_sag(3)) - 1e-9

    def test_cube_steiner(self):
        R = 0.2
        out = buffer_body(cube(), BufferParams(R, 3))
        steiner = 1 + 6 * R + math.pi * 12 * R * R / 4 + 4 * math.pi * R**3 / 3
        assert abs(mesh_volume(out) - steiner) / steiner < 0.03

    def test_double_buffer_contains_single(self, rng):
        # buffer(buffer(X, R1), R2) contains buffer(X, R1 + R2) shrunk by
        # the compounded sag
        p1, p2 = BufferParams(0.15, 2), BufferParams(0.1, 2)
        c = cube()
        double = buffer_body(buffer_body(c, p1), p2)
        single = buffer_body(c, BufferParams(0.25, 2))
        slack = 1 - (1 - ball_sag(2)) ** 2
        center = np.array([0.5, 0.5, 0.5])
        pts = single.vertices[rng.choice(len(single.vertices), size=200, replace=False)]
        shrunk = center + (pts - center) * (1 - slack - 1e-6)
        for q in shrunk:
            assert point_in_body(tuple(q), double) != "outside"

    def test_monotone_in_distance(self, rng):
        c = cube()
        small = buffer_body(c, BufferParams(0.1, 2))
        big = buffer_body(c, BufferParams(0.3, 2))
        idx = rng.choice(len(small.vertices), size=150, replace=False)
        for q in small.vertices[idx]:
            assert point_in_body(tuple(q), big) == "inside"

    def test_contains_original(self, rng):
        c = cube()
        out = buffer_body(c, BufferParams(0.2, 2))
        for q in c.vertices:
            assert point_in_body(tuple(q), out) == "inside"

    def test_translation_equivariance_exact(self):
        p = BufferParams(0.2, 2)
        a = buffer_body(cube(), p)
        b = buffer_body(cube(origin=(7.0, -3.0, 2.0)), p)
        assert mesh_volume(a) == pytest.approx(mesh_volume(b), rel=1e-12)

    def test_rotation_equivariance_up_to_discretization(self):
        # the inscribed ball mesh is not rotation-invariant, so volumes only
        # agree within the facet-sag envelope
        th = 0.7
        R = np.array(
            [[math.cos(th), -math.sin(th), 0], [math.sin(th), math.cos(th), 0], [0, 0, 1]]
        )
        p = BufferParams(0.2, 2)
        a = buffer_body(cube(), p)
        b = buffer_body(cube().transformed(R), p)
        assert mesh_volume(a) == pytest.approx(mesh_volume(b), rel=3 * ball_sag(2))
