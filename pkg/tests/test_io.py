import numpy as np
import pytest

from casson_asgs.fe import FieldState
from casson_asgs.io import read_table_csv, read_vtk, write_table_csv, write_vtk
from casson_asgs.mesh import build_structured_mesh


def test_two_triangle_zero_state(tmp_path):
    mesh = build_structured_mesh(1)
    path = write_vtk(mesh, FieldState.zeros(mesh.n_nodes), tmp_path / "z.vtk")
    d = read_vtk(path)
    assert d["points"].shape == (4, 3) and d["cells"].shape == (2, 3)
    assert np.all(d["cell_types"] == 5)
    for arr in d["point_data"].values():
        assert not np.any(arr)
    assert set(d["point_data"]) == {"velocity", "p", "c"}


def test_roundtrip(tmp_path, rng):
    mesh = build_structured_mesh(5)
    st = FieldState(*(rng.standard_normal(mesh.n_nodes) for _ in range(4)), t=0.3)
    d = read_vtk(write_vtk(mesh, st, tmp_path / "r.vtk"))
    assert np.abs(d["points"][:, :2] - mesh.nodes).max() <= 1e-12
    assert np.array_equal(d["cells"], mesh.triangles)
    assert d["cells"].max() < mesh.n_nodes
    assert np.array_equal(d["point_data"]["velocity"][:, 0], st.u1)
    assert np.array_equal(d["point_data"]["p"], st.p) and np.array_equal(d["point_data"]["c"], st.c)


def test_unwritable_path_reports_path(tmp_path):
    mesh = build_structured_mesh(1)
    with pytest.raises(OSError, match="nope"):
        write_vtk(mesh, FieldState.zeros(4), tmp_path / "nope" / "x.vtk")


def test_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.vtk"
    p.write_text("hello\n")
    with pytest.raises(ValueError):
        read_vtk(p)


def test_csv_roundtrip(tmp_path):
    p = write_table_csv(tmp_path / "t.csv", ["a", "b"], [["1", "x"], ["2", ""]])
    header, rows = read_table_csv(p)
    assert header == ["a", "b"] and rows == [["1", "x"], ["2", ""]]
