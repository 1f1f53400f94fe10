"""Physical coefficients and boundary data for one coupled flow/transport problem."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .rheology import ViscosityModel

FD_STEP = 1e-6


def _zero(x, y, t):
    return np.zeros(np.broadcast(x, y).shape)


def constant(value: float) -> Callable:
    def fn(x, y, t):
        return np.full(np.broadcast(x, y).shape, float(value))

    fn.constant_value = float(value)
    return fn


def lid_velocity(x, y, t):
    """Unit horizontal velocity on y = 1 (corners included), zero elsewhere."""
    return np.where(np.isclose(y, 1.0), 1.0, 0.0)


@dataclass
class CoefficientSet:
    """Coefficients of the coupled Casson / transport system.

    Space-time data are vectorised callables ``fn(x, y, t)``. ``fF`` returns a
    pair ``(f1, f2)``. ``dirichlet`` maps ``"u1"``, ``"u2"``, ``"c"`` to the
    boundary value callables; missing entries mean homogeneous data.
    """

    rho: float = 1.0
    alpha: float = 0.01
    viscosity: ViscosityModel = field(default_factory=ViscosityModel)
    D1: Callable = field(default_factory=lambda: constant(0.01))
    D2: Callable = field(default_factory=lambda: constant(0.01))
    dD1_dx: Optional[Callable] = None
    dD2_dy: Optional[Callable] = None
    fF: Optional[Callable] = None
    fT: Optional[Callable] = None
    dirichlet: dict = field(default_factory=dict)
    D_floor: float = 1e-12

    def __post_init__(self):
        if not (np.isfinite(self.rho) and self.rho > 0):
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if not self.D_floor > 0:
            raise ValueError("D_floor must be positive")
        unknown = set(self.dirichlet) - {"u1", "u2", "c"}
        if unknown:
            raise ValueError(f"unknown Dirichlet variables {sorted(unknown)}")

    def diffusion(self, x, y, t):
        """``(D1, D2, dD1/dx, dD2/dy)`` at the given points; D clamped at ``D_floor``."""
        d1 = np.broadcast_to(np.asarray(self.D1(x, y, t), float), np.shape(x))
        d2 = np.broadcast_to(np.asarray(self.D2(x, y, t), float), np.shape(x))
        if self.dD1_dx is not None:
            g1 = self.dD1_dx(x, y, t)
        elif hasattr(self.D1, "constant_value"):
            g1 = 0.0
        else:
            g1 = (self.D1(x + FD_STEP, y, t) - self.D1(x - FD_STEP, y, t)) / (2 * FD_STEP)
        if self.dD2_dy is not None:
            g2 = self.dD2_dy(x, y, t)
        elif hasattr(self.D2, "constant_value"):
            g2 = 0.0
        else:
            g2 = (self.D2(x, y + FD_STEP, t) - self.D2(x, y - FD_STEP, t)) / (2 * FD_STEP)
        g1 = np.broadcast_to(np.asarray(g1, float), np.shape(x))
        g2 = np.broadcast_to(np.asarray(g2, float), np.shape(x))
        return np.maximum(d1, self.D_floor), np.maximum(d2, self.D_floor), g1, g2

    def body_force(self, x, y, t):
        if self.fF is None:
            z = _zero(x, y, t)
            return z, z.copy()
        f1, f2 = self.fF(x, y, t)
        shape = np.broadcast(x, y).shape
        return np.broadcast_to(f1, shape).astype(float), np.broadcast_to(f2, shape).astype(float)

    def source(self, x, y, t):
        if self.fT is None:
            return _zero(x, y, t)
        return np.broadcast_to(self.fT(x, y, t), np.broadcast(x, y).shape).astype(float)

    def boundary_value(self, var: str, x, y, t):
        fn = self.dirichlet.get(var, _zero)
        return np.broadcast_to(np.asarray(fn(x, y, t), float), np.shape(x)).copy()
