"""Regularised Casson viscosity and its concentration-dependent variants."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("constant", "casson_k", "linear_c", "exp_c")

# linear_c is clamped at this fraction of the plasma viscosity
ETA_FLOOR_FRACTION = 1e-6


@dataclass(frozen=True)
class ViscosityModel:
    """Viscosity law ``mu(c, J2)``.

    ``kind`` selects eta(c):

    * ``constant``: ``eta``
    * ``linear_c``: ``eta0_p * (1 + K c)``
    * ``exp_c``: ``A * exp(B c)``
    * ``casson_k``: fitted Casson law ``(k0 + k1 J^(1/4))^2 J^(-1/2)``,
      independent of c (``tau_y`` is ignored, k0 plays its role).

    ``J`` is regularised as ``J2 + eps_J`` so the yield term stays finite.
    """

    kind: str = "constant"
    eta: float = 1.0
    k0: float = 0.1937
    k1: float = 0.055
    eta0_p: float = 0.16
    K: float = 0.25
    A: float = 0.129
    B: float = 0.101
    tau_y: float = 0.0
    eps_J: float = 1e-10

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown viscosity kind {self.kind!r}; expected one of {KINDS}")
        for name in ("eta", "k0", "k1", "eta0_p", "K", "A", "B", "tau_y", "eps_J"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"viscosity parameter {name}={v} must be finite and >= 0")
        if self.kind == "constant" and self.eta <= 0:
            raise ValueError("constant viscosity must be positive")

    @property
    def yield_free(self) -> bool:
        return self._yield_sqrt() == 0.0

    def _yield_sqrt(self) -> float:
        if self.kind == "casson_k":
            return self.k0
        return float(np.sqrt(self.tau_y / 2.0))

    def eta_of_c(self, c):
        return eta_of_c(self, c)

    def __call__(self, c, J2):
        return effective_viscosity(self, c, J2)


def compute_J2(grad_u) -> np.ndarray:
    """Second invariant ``2 u1_x^2 + 2 u2_y^2 + (u1_y + u2_x)^2``.

    ``grad_u[..., i, j]`` is d u_i / d x_j.
    """
    g = np.asarray(grad_u, dtype=float)
    ux, uy = g[..., 0, 0], g[..., 0, 1]
    vx, vy = g[..., 1, 0], g[..., 1, 1]
    return 2.0 * ux**2 + 2.0 * vy**2 + (uy + vx) ** 2


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite input to viscosity evaluation")


def eta_of_c(model: ViscosityModel, c):
    c = np.asarray(c, dtype=float)
    if model.kind == "constant":
        return np.full_like(c, model.eta)
    if model.kind == "casson_k":
        return np.full_like(c, model.k1**2)
    if model.kind == "linear_c":
        return np.maximum(model.eta0_p * (1.0 + model.K * c), model.eta0_p * ETA_FLOOR_FRACTION)
    return model.A * np.exp(model.B * c)


def deta_dc(model: ViscosityModel, c):
    c = np.asarray(c, dtype=float)
    if model.kind in ("constant", "casson_k"):
        return np.zeros_like(c)
    if model.kind == "linear_c":
        active = model.eta0_p * (1.0 + model.K * c) > model.eta0_p * ETA_FLOOR_FRACTION
        return np.where(active, model.eta0_p * model.K, 0.0)
    return model.A * model.B * np.exp(model.B * c)


def effective_viscosity(model: ViscosityModel, c, J2):
    """``(s + sqrt(eta) J^(1/4))^2 J^(-1/2)`` with ``s = sqrt(tau_y/2)``, ``J = J2 + eps_J``.

    Evaluated in expanded form ``s^2 J^-1/2 + 2 s sqrt(eta) J^-1/4 + eta`` so
    that the yield-free case returns eta(c) exactly.
    """
    c = np.asarray(c, dtype=float)
    J2 = np.asarray(J2, dtype=float)
    _check_finite(c, J2)
    if np.any(J2 < 0):
        raise ValueError("J2 must be non-negative")
    eta = eta_of_c(model, c)
    s = model._yield_sqrt()
    if s == 0.0:
        return np.broadcast_to(eta, np.broadcast(c, J2).shape).copy()
    J = J2 + model.eps_J
    if np.any(J == 0):
        raise ValueError("J2 + eps_J vanishes with a nonzero yield term")
    q = J**-0.25
    return s * s * q * q + 2.0 * s * np.sqrt(eta) * q + eta


def viscosity_partials(model: ViscosityModel, c, J2):
    """``(dmu/dc, dmu/dJ2)`` of the regularised law."""
    c = np.asarray(c, dtype=float)
    J2 = np.asarray(J2, dtype=float)
    eta = eta_of_c(model, c)
    de = deta_dc(model, c)
    s = model._yield_sqrt()
    if s == 0.0:
        return np.broadcast_to(de, np.broadcast(c, J2).shape).copy(), np.zeros(np.broadcast(c, J2).shape)
    J = J2 + model.eps_J
    q = J**-0.25
    dmu_dc = de * (1.0 + s * q / np.sqrt(eta))
    dmu_dJ = -0.5 * s * s * q**6 - 0.5 * s * np.sqrt(eta) * q**5
    return dmu_dc, dmu_dJ
