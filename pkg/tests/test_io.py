import numpy as np
import pytest

from geosolid import io as gio
from geosolid.core import mesh_volume
from geosolid.errors import FileFormatError
from geosolid.shapes import cube, icosphere


class TestMeshRoundTrip:
    def test_off_round_trip_exact(self, tmp_path):
        m = icosphere(2, radius=1.2345678901234567, center=(0.1, -0.2, 0.3))
        path = tmp_path / "s.off"
        gio.save_off(m, path)
        m2, warnings = gio.load_off(path)
        assert not warnings
        assert np.array_equal(m.vertices, m2.vertices)
        assert np.array_equal(m.triangles, m2.triangles)

    def test_off_byte_determinism(self, tmp_path):
        m = cube()
        gio.save_off(m, tmp_path / "a.off")
        gio.save_off(m, tmp_path / "b.off")
        assert (tmp_path / "a.off").read_bytes() == (tmp_path / "b.off").read_bytes()

    def test_obj_round_trip(self, tmp_path):
        m = cube()
        path = tmp_path / "c.obj"
        gio.save_obj(m, path)
        m2, _ = gio.load_obj(path)
        assert mesh_volume(m2) == pytest.approx(1.0)

    def test_off_polygon_faces_triangulated(self, tmp_path):
        text = "OFF\n8 6 0\n"
        v = cube().vertices
        quads = [
            (0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4),
            (2, 3, 7, 6), (1, 2, 6, 5), (3, 0, 4, 7),
        ]
        for p in v:
            text += f"{p[0]} {p[1]} {p[2]}\n"
        for q in quads:
            text += "4 " + " ".join(map(str, q)) + "\n"
        path = tmp_path / "q.off"
        path.write_text(text)
        m, _ = gio.load_off(path)
        assert len(m.triangles) == 12
        assert mesh_volume(m) == pytest.approx(1.0)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "bad.off"
        p.write_text("NOT-OFF\n")
        with pytest.raises(FileFormatError):
            gio.load_off(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileFormatError):
            gio.load_off(tmp_path / "nope.off")

    def test_unknown_extension(self, tmp_path):
        with pytest.raises(FileFormatError):
            gio.load_mesh(tmp_path / "x.stl")


class TestLayerJson:
    def test_round_trip(self, tmp_path):
        from geosolid.overlay import layer

        ly = layer(
            "zones",
            "EPSG:32650",
            [
                ([(0, 0), (2, 0), (2, 2), (0, 2)], {"use": "farm", "score": 3}),
            ],
        )
        path = tmp_path / "zones.json"
        gio.save_layer_json(ly, path)
        ly2 = gio.load_layer_json(path)
        assert ly2.name == "zones"
        assert ly2.crs_tag == "EPSG:32650"
        assert ly2.regions[0].attributes == {"use": "farm", "score": 3}
        assert ly2.regions[0].polygon.area() == pytest.approx(4.0)

    def test_missing_crs_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        gio.write_json({"type": "FeatureCollection", "name": "x", "features": []}, path)
        with pytest.raises(FileFormatError):
            gio.load_layer_json(path)


class TestSceneManifest:
    def test_load_entities(self, tmp_path):
        gio.save_off(cube(), tmp_path / "c.off")
        manifest = {
            "entities": [
                {"id": "p1", "kind": "point", "geometry": {"point": [1, 2, 3]}},
                {"id": "line", "kind": "polyline", "geometry": {"points": [[0, 0, 0], [1, 0, 0]]}},
                {"id": "solid", "kind": "body", "file": "c.off", "attributes": {"name": "cube"}},
            ]
        }
        path = tmp_path / "scene.json"
        gio.write_json(manifest, path)
        entries = gio.load_scene_manifest(path)
        assert [e["kind"] for e in entries] == ["point", "polyline", "body"]
        assert mesh_volume(entries[2]["mesh"]) == pytest.approx(1.0)

    def test_duplicate_ids_rejected(self, tmp_path):
        manifest = {
            "entities": [
                {"id": "a", "kind": "point", "geometry": {"point": [0, 0, 0]}},
                {"id": "a", "kind": "point", "geometry": {"point": [1, 0, 0]}},
            ]
        }
        path = tmp_path / "dup.json"
        gio.write_json(manifest, path)
        with pytest.raises(FileFormatError):
            gio.load_scene_manifest(path)
