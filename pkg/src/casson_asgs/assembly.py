"""Global assembly of the semi-implicit ASGS system with dynamic subscales."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .coefficients import CoefficientSet
from .fe import DEFAULT_RULE, FieldState, QuadratureRule, qp_values, qp_weights
from .mesh import Mesh
from .stabilization import (StabilizationSettings, StepContext, SubscaleField,
                            build_step_context)

N_VARS = 4
VAR_INDEX = {"u1": 0, "u2": 1, "p": 2, "c": 3}


def dof(node, var) -> np.ndarray:
    """Global row of ``var`` at ``node`` in the node-blocked unknown vector."""
    v = VAR_INDEX[var] if isinstance(var, str) else var
    return N_VARS * np.asarray(node) + v


class SparsityPattern:
    """CSR pattern of an element-wise scatter, reused across time steps.

    Values are summed with ``np.bincount`` in element order, so two assemblies
    of the same local arrays are bitwise identical.
    """

    def __init__(self, conn: np.ndarray, n: int):
        E, m = conn.shape
        rows = np.repeat(conn, m, axis=1).ravel()
        cols = np.tile(conn, (1, m)).ravel()
        key = rows.astype(np.int64) * n + cols
        uniq, self.scatter = np.unique(key, return_inverse=True)
        self.n = n
        self.nnz = uniq.size
        self.indices = (uniq % n).astype(np.int32)
        r = uniq // n
        self.indptr = np.concatenate([[0], np.cumsum(np.bincount(r, minlength=n))]).astype(np.int32)
        self.row_of = r
        self.conn = conn

    def matrix(self, local: np.ndarray) -> sp.csr_matrix:
        data = np.bincount(self.scatter, weights=local.ravel(), minlength=self.nnz)
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()), shape=(self.n, self.n))

    def vector(self, local: np.ndarray) -> np.ndarray:
        return np.bincount(self.conn.ravel(), weights=local.ravel(), minlength=self.n)


_PATTERNS: dict = {}


def coupled_pattern(mesh: Mesh) -> SparsityPattern:
    key = ("coupled", id(mesh))
    if key not in _PATTERNS:
        conn = (N_VARS * mesh.triangles[:, :, None] + np.arange(N_VARS)).reshape(mesh.n_el, 12)
        _PATTERNS[key] = (mesh, SparsityPattern(conn, N_VARS * mesh.n_nodes))
    return _PATTERNS[key][1]


def scalar_pattern(mesh: Mesh) -> SparsityPattern:
    key = ("scalar", id(mesh))
    if key not in _PATTERNS:
        _PATTERNS[key] = (mesh, SparsityPattern(mesh.triangles, mesh.n_nodes))
    return _PATTERNS[key][1]


@dataclass
class AssembledSystem:
    """Global matrix and load over ``[u1, u2, p, c]`` blocked per node."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    n_nodes: int
    constrained: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def dof(self, node, var):
        return dof(node, var)


def assemble_from_context(mesh: Mesh, ctx: StepContext, backend: str | None = None) -> AssembledSystem:
    Ke, Fe = kernels.local_system(ctx, backend)
    pat = coupled_pattern(mesh)
    return AssembledSystem(pat.matrix(Ke), pat.vector(Fe), mesh.n_nodes)


def assemble_step(mesh: Mesh, state_prev: FieldState, subs_prev: SubscaleField,
                  coeffs: CoefficientSet, dt: float, t_new: float,
                  stab: StabilizationSettings = StabilizationSettings(),
                  rule: QuadratureRule = DEFAULT_RULE, backend: str | None = None):
    """Assemble the unconstrained step system; returns ``(system, context)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    ctx = build_step_context(mesh, state_prev, subs_prev, coeffs, dt, t_new, stab, rule)
    system = assemble_from_context(mesh, ctx, backend)
    if not (np.all(np.isfinite(system.matrix.data)) and np.all(np.isfinite(system.rhs))):
        raise FloatingPointError("non-finite entries in assembled system")
    return system, ctx


def dirichlet_constraints(mesh: Mesh, coeffs: CoefficientSet, t: float) -> dict:
    """``{global dof: value}`` for u1, u2 and c on every boundary node."""
    nodes = mesh.boundary_nodes
    x, y = mesh.nodes[nodes, 0], mesh.nodes[nodes, 1]
    out = {}
    for var in ("u1", "u2", "c"):
        vals = coeffs.boundary_value(var, x, y, t)
        for d, v in zip(dof(nodes, var).tolist(), vals.tolist()):
            out[d] = v
    return out


def apply_dirichlet(system: AssembledSystem, constraints: dict, pin_pressure_node: int | None = 0,
                    ) -> AssembledSystem:
    """Eliminate constrained rows and columns; optionally pin one pressure dof to zero.

    The sparsity pattern is kept (eliminated entries become explicit zeros).
    """
    cons = dict(constraints)
    if pin_pressure_node is not None:
        pdof = int(dof(pin_pressure_node, "p"))
        if pdof in cons and cons[pdof] != 0.0:
            raise ValueError(f"pressure pin at node {pin_pressure_node} conflicts with a constraint")
        cons[pdof] = 0.0
    if not cons:
        return system
    idx = np.array(sorted(cons), dtype=np.int64)
    vals = np.array([cons[i] for i in idx.tolist()])
    A = system.matrix.copy()
    g = np.zeros(A.shape[0])
    g[idx] = vals
    rhs = system.rhs - A @ g
    mask = np.zeros(A.shape[0], dtype=bool)
    mask[idx] = True
    rows = np.repeat(np.arange(A.shape[0]), np.diff(A.indptr))
    hit = mask[rows] | mask[A.indices]
    A.data[hit] = 0.0
    A.data[hit & (rows == A.indices)] = 1.0
    rhs[idx] = vals
    return AssembledSystem(A, rhs, system.n_nodes, idx, vals)


def convection_block(mesh: Mesh, u_prev: FieldState, rho: float,
                     rule: QuadratureRule = DEFAULT_RULE, backend: str | None = None) -> sp.csr_matrix:
    """Galerkin convection operator for one velocity component (skew by construction)."""
    a = np.stack([qp_values(mesh, u_prev.u1, rule), qp_values(mesh, u_prev.u2, rule)], axis=-1)
    gu1 = np.einsum("kad,ka->kd", mesh.grads, u_prev.u1[mesh.triangles])
    gu2 = np.einsum("kad,ka->kd", mesh.grads, u_prev.u2[mesh.triangles])
    diva = gu1[:, 0] + gu2[:, 1]
    C = kernels.galerkin_convection(rule.points, qp_weights(mesh, rule), mesh.grads, a, diva, rho, backend)
    return scalar_pattern(mesh).matrix(C)
