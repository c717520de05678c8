import numpy as np
import pytest

from geosolid.convex import is_convex
from geosolid.core import mesh_volume, validate_mesh
from geosolid.decompose import convex_decompose, split_by_plane, tetrahedralize
from geosolid.errors import BudgetExceededError, InvalidMeshError
from geosolid.shapes import cube, l_prism, staircase, unit_tetrahedron

from oracles import voxel_grid, voxelize


class TestSplitByPlane:
    def test_cube_split_volumes(self):
        below, above = split_by_plane(cube(), [(0, 0, 0.4), (1, 0, 0.4), (0, 1, 0.4)])
        assert mesh_volume(below) == pytest.approx(0.4)
        assert mesh_volume(above) == pytest.approx(0.6)
        assert validate_mesh(below).ok and validate_mesh(above).ok

    def test_missing_plane_returns_one_side(self):
        below, above = split_by_plane(cube(), [(0, 0, 5.0), (1, 0, 5.0), (0, 1, 5.0)])
        assert above.is_empty
        assert mesh_volume(below) == pytest.approx(1.0)

    def test_oblique_split_conserves(self):
        below, above = split_by_plane(cube(), [(0.2, 0, 0), (0, 1, 0.9), (1, 0.3, 0.4)])
        assert mesh_volume(below) + mesh_volume(above) == pytest.approx(1.0, rel=1e-12)
        assert validate_mesh(below).ok and validate_mesh(above).ok


class TestTetrahedralize:
    def test_cube(self):
        d = tetrahedralize(cube())
        assert d.count in (5, 6)
        assert d.total_volume() == pytest.approx(1.0, rel=1e-9)
        assert all(validate_mesh(t).ok for t in d.pieces)

    def test_tetra_is_fixed_point(self):
        d = tetrahedralize(unit_tetrahedron())
        assert d.count == 1
        assert d.total_volume() == pytest.approx(1 / 6, rel=1e-12)

    def test_l_prism_conserves_volume(self):
        d = tetrahedralize(l_prism())
        assert d.total_volume() == pytest.approx(3.0, rel=1e-9)

    def test_open_mesh_rejected(self):
        from geosolid.core import Mesh

        c = cube()
        with pytest.raises(InvalidMeshError):
            tetrahedralize(Mesh(c.vertices, c.triangles[:-1]))


class TestConvexDecompose:
    def test_convex_input_single_piece(self):
        d = convex_decompose(cube())
        assert d.count == 1
        assert mesh_volume(d.pieces[0]) == pytest.approx(1.0, rel=1e-12)
        got = {tuple(v) for v in d.pieces[0].vertices}
        want = {tuple(v) for v in cube().vertices}
        assert got == want

    def test_l_prism(self):
        d = convex_decompose(l_prism())
        assert d.count <= 3
        assert d.total_volume() == pytest.approx(3.0, rel=1e-9)
        assert all(is_convex(p) for p in d.pieces)

    @pytest.mark.parametrize("k", [2, 4, 6])
    def test_staircase(self, k):
        st = staircase(k)
        d = convex_decompose(st)
        assert d.count <= k + 1
        assert d.total_volume() == pytest.approx(mesh_volume(st), rel=1e-9)
        assert all(is_convex(p) for p in d.pieces)

    def test_interior_disjoint_by_voxels(self):
        d = convex_decompose(l_prism())
        grid = voxel_grid(d.pieces, n=128)
        total = np.zeros((0,))
        acc = None
        for p in d.pieces:
            occ = voxelize(p, grid)
            if acc is None:
                acc = occ.astype(np.int8)
            else:
                acc += occ
        assert acc.max() <= 1  # no voxel center strictly inside two pieces

    def test_budget_errors_with_achieved_count(self):
        with pytest.raises(BudgetExceededError) as e:
            convex_decompose(staircase(4), max_pieces=1)
        assert e.value.achieved >= 2

    def test_determinism(self):
        d1 = convex_decompose(staircase(3))
        d2 = convex_decompose(staircase(3))
        assert d1.count == d2.count
        for p, q in zip(d1.pieces, d2.pieces):
            assert np.array_equal(p.vertices, q.vertices)
            assert np.array_equal(p.triangles, q.triangles)

    def test_piece_count_bounded_by_tets(self):
        st = staircase(3)
        assert convex_decompose(st).count <= tetrahedralize(st).count

    def test_provenance_genus(self):
        from geosolid.shapes import torus

        d = tetrahedralize(cube())
        assert d.provenance["genus"] == 0
