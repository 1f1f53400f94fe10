"""Lid-driven cavity set-up and post-processing: streamfunction, vortex centre, profiles."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import scalar_pattern
from .coefficients import CoefficientSet, constant, lid_velocity
from .fe import FieldState
from .mesh import Mesh
from .rheology import ViscosityModel

CAVITY_CENTRE = (0.5, 0.5)


def cavity_coefficients(Re: float, rho: float = 1.0, tau_y: float = 0.0) -> CoefficientSet:
    """Unit lid on y = 1, no forcing, eta = rho U L / Re with U = L = 1.

    The transport unknown is carried along with zero data so the coupled
    operator is the same one used elsewhere.
    """
    if not (np.isfinite(Re) and Re > 0):
        raise ValueError(f"Re must be positive, got {Re}")
    visc = ViscosityModel("constant", eta=rho / Re, tau_y=tau_y)
    return CoefficientSet(rho=rho, alpha=0.01, viscosity=visc, D1=constant(0.01),
                          D2=constant(0.01), dirichlet={"u1": lid_velocity})


@dataclass
class StreamFunctionField:
    psi: np.ndarray
    vorticity: np.ndarray
    argmin: int
    argmax: int
    mesh: Mesh

    @property
    def primary(self) -> int:
        """Node of the dominant vortex (largest |psi|)."""
        return self.argmin if abs(self.psi[self.argmin]) >= abs(self.psi[self.argmax]) else self.argmax

    @property
    def centre(self) -> np.ndarray:
        return self.mesh.nodes[self.primary].copy()

    @property
    def extremum(self) -> float:
        return float(self.psi[self.primary])

    def distance_to_centre(self) -> float:
        return float(np.hypot(*(self.centre - np.asarray(CAVITY_CENTRE))))


def stiffness_matrix(mesh: Mesh) -> sp.csr_matrix:
    K = mesh.areas[:, None, None] * np.einsum("kad,kbd->kab", mesh.grads, mesh.grads)
    return scalar_pattern(mesh).matrix(K)


def mass_matrix(mesh: Mesh) -> sp.csr_matrix:
    local = (np.ones((3, 3)) + np.eye(3)) / 12.0
    return scalar_pattern(mesh).matrix(mesh.areas[:, None, None] * local)


def nodal_vorticity(mesh: Mesh, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """``du2/dx - du1/dy`` per element, averaged to nodes with area weights."""
    g1 = np.einsum("kad,ka->kd", mesh.grads, u1[mesh.triangles])
    g2 = np.einsum("kad,ka->kd", mesh.grads, u2[mesh.triangles])
    w = g2[:, 0] - g1[:, 1]
    num = np.bincount(mesh.triangles.ravel(), weights=np.repeat(mesh.areas * w, 3), minlength=mesh.n_nodes)
    den = np.bincount(mesh.triangles.ravel(), weights=np.repeat(mesh.areas, 3), minlength=mesh.n_nodes)
    return num / den


def compute_streamfunction(mesh: Mesh, velocity) -> StreamFunctionField:
    """Solve ``-lap psi = omega`` with psi = 0 on the boundary.

    ``velocity`` is a FieldState or a pair of nodal arrays.
    """
    if isinstance(velocity, FieldState):
        u1, u2 = velocity.u1, velocity.u2
    else:
        u1, u2 = (np.asarray(v, dtype=float) for v in velocity)
    if u1.shape != (mesh.n_nodes,) or u2.shape != (mesh.n_nodes,):
        raise ValueError("velocity arrays must be nodal")
    omega = nodal_vorticity(mesh, u1, u2)
    K = stiffness_matrix(mesh).tocsr()
    b = mass_matrix(mesh) @ omega
    interior = np.flatnonzero(~mesh.boundary_mask())
    psi = np.zeros(mesh.n_nodes)
    if interior.size:
        Kii = K[interior][:, interior].tocsc()
        psi[interior] = spla.spsolve(Kii, b[interior])
    return StreamFunctionField(psi, omega, int(np.argmin(psi)), int(np.argmax(psi)), mesh)


def evaluate_p1(mesh: Mesh, nodal: np.ndarray, points) -> np.ndarray:
    """Evaluate a P1 field at arbitrary points of the structured mesh."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(pts < -1e-12) or np.any(pts > 1 + 1e-12):
        raise ValueError("points must lie in the unit square")
    n = mesh.n_div
    s = np.clip(pts * n, 0.0, n)
    i = np.minimum(s[:, 0].astype(np.int64), n - 1)
    j = np.minimum(s[:, 1].astype(np.int64), n - 1)
    xl, yl = s[:, 0] - i, s[:, 1] - j
    k = 2 * (j * n + i) + (xl < yl)
    tri = mesh.triangles[k]
    v = mesh.nodes[tri]
    # barycentric coordinates from the stored gradients: lambda_a(p) = lambda_a(v0) + g_a.(p - v0)
    lam = np.einsum("kad,kd->ka", mesh.grads[k], pts - v[:, 0])
    lam[:, 0] += 1.0
    return np.sum(lam * nodal[tri], axis=1)


def centerline_profiles(mesh: Mesh, state: FieldState):
    """``(y, u1(0.5, y))`` and ``(x, u2(x, 0.5))`` sampled at the mesh lines."""
    s = np.linspace(0.0, 1.0, mesh.n_div + 1)
    half = np.full_like(s, 0.5)
    u1 = evaluate_p1(mesh, state.u1, np.column_stack([half, s]))
    u2 = evaluate_p1(mesh, state.u2, np.column_stack([s, half]))
    return (s, u1), (s, u2)


def centerline_flux(mesh: Mesh, state: FieldState, x0: float = 0.5) -> tuple:
    """Forward and return flux through the vertical line x = x0 (trapezoid, exact for P1)."""
    ys = np.linspace(0.0, 1.0, mesh.n_div + 1)
    # P1 is linear between the line's crossings with element edges; include the diagonals
    ys = np.union1d(ys, np.clip(ys + (x0 * mesh.n_div % 1.0) / mesh.n_div, 0.0, 1.0))
    u = evaluate_p1(mesh, state.u1, np.column_stack([np.full_like(ys, x0), ys]))
    pos, neg = 0.0, 0.0
    for a, b, ya, yb in zip(u[:-1], u[1:], ys[:-1], ys[1:]):
        dy = yb - ya
        if a >= 0 and b >= 0:
            pos += 0.5 * (a + b) * dy
        elif a <= 0 and b <= 0:
            neg += 0.5 * (a + b) * dy
        else:  # sign change inside the segment
            yz = dy * a / (a - b)
            if a > 0:
                pos += 0.5 * a * yz
                neg += 0.5 * b * (dy - yz)
            else:
                neg += 0.5 * a * yz
                pos += 0.5 * b * (dy - yz)
    return pos, neg


def write_streamfunction_csv(path, sf: StreamFunctionField) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "psi"])
        for (x, y), p in zip(sf.mesh.nodes, sf.psi):
            w.writerow([f"{x:.6f}", f"{y:.6f}", f"{p:.10e}"])
    return path


def write_profile_csv(path, coord_name: str, value_name: str, coords, values) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([coord_name, value_name])
        for s, v in zip(coords, values):
            w.writerow([f"{s:.6f}", f"{v:.10e}"])
    return path
