"""P1 basis, triangle quadrature, field evaluation and norms."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .mesh import Mesh


@dataclass(frozen=True)
class QuadratureRule:
    """Rule on the reference triangle in barycentric coordinates.

    Weights are normalised to the triangle area, i.e. they sum to one.
    """

    points: np.ndarray  # (nq, 3)
    weights: np.ndarray  # (nq,)
    degree: int

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def _sym_orbit(a: float) -> list:
    b = 1.0 - 2.0 * a
    return [(a, a, b), (a, b, a), (b, a, a)]


def dunavant4() -> QuadratureRule:
    a1, w1 = 0.44594849091596488632, 0.22338158967801146570
    a2, w2 = 0.09157621350977074346, 0.10995174365532186764
    pts = np.array(_sym_orbit(a1) + _sym_orbit(a2))
    w = np.array([w1] * 3 + [w2] * 3)
    return QuadratureRule(points=pts, weights=w, degree=4)


def centroid_rule() -> QuadratureRule:
    return QuadratureRule(points=np.full((1, 3), 1.0 / 3.0), weights=np.ones(1), degree=1)


DEFAULT_RULE = dunavant4()


@dataclass(frozen=True)
class FieldState:
    """Nodal coefficients of (u1, u2, p, c) at time ``t``."""

    u1: np.ndarray
    u2: np.ndarray
    p: np.ndarray
    c: np.ndarray
    t: float = 0.0

    @classmethod
    def zeros(cls, n_nodes: int, t: float = 0.0) -> "FieldState":
        z = np.zeros(n_nodes)
        return cls(z.copy(), z.copy(), z.copy(), z.copy(), t)

    @classmethod
    def from_vector(cls, x: np.ndarray, t: float) -> "FieldState":
        x = x.reshape(-1, 4)
        return cls(x[:, 0].copy(), x[:, 1].copy(), x[:, 2].copy(), x[:, 3].copy(), t)

    def to_vector(self) -> np.ndarray:
        """Node-blocked global vector ``[u1_0, u2_0, p_0, c_0, u1_1, ...]``."""
        return np.column_stack([self.u1, self.u2, self.p, self.c]).ravel()

    def with_time(self, t: float) -> "FieldState":
        return replace(self, t=t)

    @property
    def velocity(self) -> np.ndarray:
        return np.column_stack([self.u1, self.u2])


def interpolate(mesh: Mesh, fn, t: float = 0.0) -> np.ndarray:
    """Nodal interpolant of ``fn(x, y, t)``."""
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    return np.broadcast_to(np.asarray(fn(x, y, t), dtype=float), x.shape).copy()


def qp_coordinates(mesh: Mesh, rule: QuadratureRule = DEFAULT_RULE) -> np.ndarray:
    """Physical quadrature points, shape (n_el, nq, 2)."""
    return np.einsum("qa,kad->kqd", rule.points, mesh.nodes[mesh.triangles])


def qp_weights(mesh: Mesh, rule: QuadratureRule = DEFAULT_RULE) -> np.ndarray:
    """Integration weights ``area_k * w_q``, shape (n_el, nq)."""
    return mesh.areas[:, None] * rule.weights[None, :]


def qp_values(mesh: Mesh, nodal: np.ndarray, rule: QuadratureRule = DEFAULT_RULE) -> np.ndarray:
    return np.einsum("qa,ka->kq", rule.points, nodal[mesh.triangles])


def element_gradients(mesh: Mesh, nodal: np.ndarray) -> np.ndarray:
    """Elementwise-constant gradient of a P1 field, shape (n_el, 2)."""
    return np.einsum("kad,ka->kd", mesh.grads, nodal[mesh.triangles])


def eval_field_at_qp(mesh: Mesh, state: FieldState, k: int, bary) -> tuple:
    """Values and gradients of (u1, u2, p, c) at barycentric point ``bary`` of element k."""
    lam = np.asarray(bary, dtype=float)
    tri = mesh.triangles[k]
    G = mesh.grads[k]
    vals, grads = [], []
    for f in (state.u1, state.u2, state.p, state.c):
        fe = f[tri]
        vals.append(float(lam @ fe))
        grads.append(G.T @ fe)
    return np.array(vals), np.array(grads)


def integrate_scalar(mesh: Mesh, density, rule: QuadratureRule = DEFAULT_RULE) -> float:
    """Integrate ``density(x, y, k)`` over the domain; arrays are (n_el, nq)."""
    X = qp_coordinates(mesh, rule)
    k = np.broadcast_to(np.arange(mesh.n_el)[:, None], X.shape[:2])
    vals = np.broadcast_to(np.asarray(density(X[..., 0], X[..., 1], k), dtype=float), k.shape)
    return float(np.sum(qp_weights(mesh, rule) * vals))


def _fd_gradient(fn, x, y, t, step=1e-6):
    gx = (fn(x + step, y, t) - fn(x - step, y, t)) / (2 * step)
    gy = (fn(x, y + step, t) - fn(x, y - step, t)) / (2 * step)
    return gx, gy


def l2_and_h1_seminorm(mesh: Mesh, nodal: np.ndarray, exact=None, exact_grad=None,
                       t: float = 0.0, rule: QuadratureRule = DEFAULT_RULE) -> tuple:
    """L2 norm and H1 seminorm of a P1 field, or of ``field - exact`` when given.

    ``exact(x, y, t)`` and ``exact_grad(x, y, t) -> (gx, gy)`` are vectorised
    callables. Without ``exact_grad`` the exact gradient is taken by central
    differences.
    """
    W = qp_weights(mesh, rule)
    vals = qp_values(mesh, nodal, rule)
    g = element_gradients(mesh, nodal)
    gx = np.broadcast_to(g[:, 0:1], vals.shape)
    gy = np.broadcast_to(g[:, 1:2], vals.shape)
    if exact is not None:
        X = qp_coordinates(mesh, rule)
        x, y = X[..., 0], X[..., 1]
        vals = vals - exact(x, y, t)
        ex, ey = exact_grad(x, y, t) if exact_grad is not None else _fd_gradient(exact, x, y, t)
        gx = gx - ex
        gy = gy - ey
    l2 = np.sqrt(np.sum(W * vals**2))
    h1 = np.sqrt(np.sum(W * (gx**2 + gy**2)))
    return float(l2), float(h1)


def lumped_mass(mesh: Mesh) -> np.ndarray:
    m = np.zeros(mesh.n_nodes)
    np.add.at(m, mesh.triangles.ravel(), np.repeat(mesh.areas / 3.0, 3))
    return m


def domain_mean(mesh: Mesh, nodal: np.ndarray) -> float:
    """Mean of a P1 field over the mesh (exact for P1)."""
    return float(np.sum(mesh.areas * nodal[mesh.triangles].mean(axis=1)) / mesh.areas.sum())
