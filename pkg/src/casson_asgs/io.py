"""Legacy-VTK and CSV output."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .fe import FieldState
from .mesh import Mesh


def _fmt(v: float) -> str:
    return repr(float(v))


def write_vtk(mesh: Mesh, state: FieldState, path, title: str = "casson_asgs field") -> Path:
    """ASCII unstructured grid with velocity vectors and p, c scalars at the nodes."""
    path = Path(path)
    n, E = mesh.n_nodes, mesh.n_el
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {n} double"]
    lines += [f"{_fmt(x)} {_fmt(y)} 0.0" for x, y in mesh.nodes]
    lines.append(f"CELLS {E} {4 * E}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {E}")
    lines += ["5"] * E
    lines.append(f"POINT_DATA {n}")
    lines.append("VECTORS velocity double")
    lines += [f"{_fmt(a)} {_fmt(b)} 0.0" for a, b in zip(state.u1, state.u2)]
    for name, arr in (("p", state.p), ("c", state.c)):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [_fmt(v) for v in arr]
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write VTK file {path}: {exc}") from exc
    return path


def read_vtk(path) -> dict:
    """Parse files produced by :func:`write_vtk`.

    Returns ``points`` (n,3), ``cells`` (E,3), ``cell_types`` and ``point_data``.
    """
    tok = Path(path).read_text().split("\n")
    if not tok[0].startswith("# vtk DataFile"):
        raise ValueError(f"{path}: not a legacy VTK file")
    words = " ".join(tok[3:]).split()
    pos = 0
    out = {"point_data": {}}

    def take(k):
        nonlocal pos
        chunk = words[pos:pos + k]
        if len(chunk) < k:
            raise ValueError(f"{path}: truncated file")
        pos += k
        return chunk

    npts = None
    while pos < len(words):
        key = take(1)[0]
        if key == "DATASET":
            take(1)
        elif key == "POINTS":
            npts, _ = int(take(1)[0]), take(1)
            out["points"] = np.array(take(3 * npts), dtype=float).reshape(npts, 3)
        elif key == "CELLS":
            ncell, size = int(take(1)[0]), int(take(1)[0])
            raw = np.array(take(size), dtype=np.int64).reshape(ncell, -1)
            if np.any(raw[:, 0] != 3):
                raise ValueError(f"{path}: only triangles are supported")
            out["cells"] = raw[:, 1:]
        elif key == "CELL_TYPES":
            ncell = int(take(1)[0])
            out["cell_types"] = np.array(take(ncell), dtype=np.int64)
        elif key == "POINT_DATA":
            npts = int(take(1)[0])
        elif key == "VECTORS":
            name, _ = take(2)
            out["point_data"][name] = np.array(take(3 * npts), dtype=float).reshape(npts, 3)
        elif key == "SCALARS":
            name, _, ncomp = take(3)
            take(2)  # LOOKUP_TABLE default
            out["point_data"][name] = np.array(take(npts * int(ncomp)), dtype=float)
        else:
            raise ValueError(f"{path}: unexpected keyword {key!r}")
    return out


def write_table_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def read_table_csv(path) -> tuple:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
