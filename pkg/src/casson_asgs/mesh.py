"""Structured triangulations of the unit square."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIDES = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class Mesh:
    """Triangular mesh of (0,1)^2.

    ``nodes`` is (n_nodes, 2), ``triangles`` is (n_el, 3) with counter-clockwise
    vertex order. ``boundary`` maps each side name to the sorted node indices on
    that side (corner nodes appear under both adjacent sides).
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary: dict
    h_k: np.ndarray
    n_div: int
    areas: np.ndarray = field(repr=False)
    grads: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return float(self.h_k.max())

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_el(self) -> int:
        return self.triangles.shape[0]

    @property
    def boundary_nodes(self) -> np.ndarray:
        return np.unique(np.concatenate([self.boundary[s] for s in SIDES]))

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = True
        return mask

    def node_sides(self, i: int) -> set:
        return {s for s in SIDES if i in set(self.boundary[s].tolist())}

    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    def dump(self, path) -> None:
        """Write a plain-text node/element listing (debugging aid)."""
        with open(path, "w") as fh:
            fh.write(f"# n_div {self.n_div}\n")
            fh.write(f"nodes {self.n_nodes}\n")
            for i, (x, y) in enumerate(self.nodes):
                tags = ",".join(sorted(self.node_sides(i))) or "-"
                fh.write(f"{i} {x:.17g} {y:.17g} {tags}\n")
            fh.write(f"triangles {self.n_el}\n")
            for k, (a, b, c) in enumerate(self.triangles):
                fh.write(f"{k} {a} {b} {c}\n")


def _geometry(nodes: np.ndarray, triangles: np.ndarray):
    p = nodes[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if np.any(det <= 0.0):
        raise ValueError("degenerate or clockwise triangle in mesh")
    area = 0.5 * det
    # grad(lambda_i) = rot90(opposite edge) / (2 area)
    grads = np.empty((triangles.shape[0], 3, 2))
    for i in range(3):
        pj = p[:, (i + 1) % 3]
        pk = p[:, (i + 2) % 3]
        grads[:, i, 0] = (pj[:, 1] - pk[:, 1]) / det
        grads[:, i, 1] = (pk[:, 0] - pj[:, 0]) / det
    edges = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
    h_k = np.sqrt((edges**2).sum(axis=2)).max(axis=1)
    return area, grads, h_k


def build_structured_mesh(n_div: int) -> Mesh:
    """Uniform n_div x n_div grid, each cell split along its SW-NE diagonal.

    Nodes are numbered lexicographically by (y, x): node ``j*(n_div+1) + i`` sits
    at ``(i/n_div, j/n_div)``.
    """
    n_div = int(n_div)
    if n_div < 1:
        raise ValueError(f"n_div must be >= 1, got {n_div}")
    m = n_div + 1
    xs = np.linspace(0.0, 1.0, m)
    yy, xx = np.meshgrid(xs, xs, indexing="ij")
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    j, i = np.meshgrid(np.arange(n_div), np.arange(n_div), indexing="ij")
    sw = (j * m + i).ravel()
    se = sw + 1
    nw = sw + m
    ne = nw + 1
    tris = np.empty((2 * n_div * n_div, 3), dtype=np.int64)
    tris[0::2] = np.column_stack([sw, se, ne])
    tris[1::2] = np.column_stack([sw, ne, nw])

    idx = np.arange(m)
    boundary = {
        "left": idx * m,
        "right": idx * m + n_div,
        "bottom": idx.copy(),
        "top": n_div * m + idx,
    }
    area, grads, h_k = _geometry(nodes, tris)
    return Mesh(nodes=nodes, triangles=tris, boundary=boundary, h_k=h_k,
                n_div=n_div, areas=area, grads=grads)


def element_geometry(mesh: Mesh, k: int):
    """Return ``(area, grads, h_k)`` for element k; ``grads[i]`` is grad(lambda_i)."""
    if not 0 <= k < mesh.n_el:
        raise IndexError(f"element index {k} out of range [0, {mesh.n_el})")
    return float(mesh.areas[k]), mesh.grads[k].copy(), float(mesh.h_k[k])


def triangle_geometry(vertices) -> tuple:
    """Area, barycentric gradients and diameter of a single triangle."""
    v = np.asarray(vertices, dtype=float).reshape(1, 3, 2)
    nodes = v[0]
    area, grads, h_k = _geometry(nodes, np.array([[0, 1, 2]]))
    return float(area[0]), grads[0], float(h_k[0])
