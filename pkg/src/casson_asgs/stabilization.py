"""Stabilisation parameters, strong residuals and dynamic subscale updates.

The subscales live at element quadrature points and are advanced with a
backward Euler step of ``M dU~/dt + tau^-1 U~ = R_h``, giving

    u~^{n+1} = tau_bar1 (R1 + rho/dt u~^n)
    p~^{n+1} = tau2 R2
    c~^{n+1} = tau_bar3 (R3 + 1/dt c~^n)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientSet
from .fe import (DEFAULT_RULE, FieldState, QuadratureRule, element_gradients, qp_coordinates,
                 qp_values, qp_weights)
from .mesh import Mesh
from .rheology import compute_J2, effective_viscosity


@dataclass(frozen=True)
class StabilizationSettings:
    c1: float = 4.0
    c2: float = 2.0
    c3: float = 1.0
    enabled: bool = True

    def __post_init__(self):
        for name in ("c1", "c2", "c3"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"stabilisation constant {name} must be positive, got {v}")


def compute_tau(h, speed, eta0, rho, D_m, alpha, c1=4.0, c2=2.0, c3=1.0):
    """Element parameters ``(tau1, tau2, tau3)``; works elementwise on arrays."""
    h = np.asarray(h, dtype=float)
    den1 = c1 * eta0 / h**2 + c2 * rho * speed / h
    den3 = 9.0 * D_m / (4.0 * h**2) + 1.5 * speed / h + alpha
    if np.any(den1 <= 0) or np.any(den3 <= 0):
        raise ValueError("stabilisation parameter is unbounded (all denominator terms vanish)")
    tau1 = 1.0 / den1
    tau2 = h**2 / (c1 * tau1)
    tau3 = c3 / den3
    return tau1, tau2, tau3


def compute_tau_bar(tau1, tau2, tau3, rho, dt):
    """``(1/dt M + tau^-1)^-1`` with ``M = diag(rho, rho, 0, 1)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    tb1 = tau1 * dt / (dt + rho * tau1)
    tb3 = tau3 * dt / (dt + tau3)
    return tb1, tau2, tb3


@dataclass
class SubscaleField:
    """Quadrature-point subscales: ``u`` (n_el, nq, 2), ``p`` and ``c`` (n_el, nq)."""

    u: np.ndarray
    p: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, n_el: int, nq: int) -> "SubscaleField":
        return cls(np.zeros((n_el, nq, 2)), np.zeros((n_el, nq)), np.zeros((n_el, nq)))

    def copy(self) -> "SubscaleField":
        return SubscaleField(self.u.copy(), self.p.copy(), self.c.copy())

    def l2_sq(self, W: np.ndarray) -> tuple:
        """Squared L2 norms ``(|u~|^2, |p~|^2, |c~|^2)`` for quadrature weights W."""
        return (float(np.sum(W * (self.u**2).sum(axis=-1))), float(np.sum(W * self.p**2)),
                float(np.sum(W * self.c**2)))


@dataclass
class ResidualSample:
    """Strong residual components; arrays of any leading shape."""

    R1: np.ndarray
    R2: np.ndarray
    R3: np.ndarray

    def at(self, k: int, q: int) -> "ResidualSample":
        return ResidualSample(self.R1[k, q].copy(), np.asarray(self.R2[k, q]), np.asarray(self.R3[k, q]))


@dataclass
class StepContext:
    """Everything frozen over one time step, sampled at quadrature points.

    ``a`` is the convecting velocity (u^n), ``mu`` the lagged viscosity, and the
    remaining fields are data at t^{n+1}. Shapes: (n_el, nq[, 2]) unless noted.
    """

    N: np.ndarray  # (nq, 3)
    W: np.ndarray
    G: np.ndarray  # (n_el, 3, 2)
    a: np.ndarray
    diva: np.ndarray  # (n_el,)
    mu: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    gD: np.ndarray
    f: np.ndarray
    fT: np.ndarray
    un: np.ndarray
    cn: np.ndarray
    usn: np.ndarray
    csn: np.ndarray
    tau1: np.ndarray
    tau2: np.ndarray
    tau3: np.ndarray
    taub1: np.ndarray
    taub3: np.ndarray
    rho: float
    alpha: float
    dt: float


def lagged_viscosity(mesh: Mesh, state: FieldState, coeffs: CoefficientSet,
                     rule: QuadratureRule = DEFAULT_RULE):
    """``mu(c^n, J2(u^n))`` at quadrature points and at element centroids."""
    gu = np.stack([element_gradients(mesh, state.u1), element_gradients(mesh, state.u2)], axis=1)
    J2 = compute_J2(gu)
    cq = qp_values(mesh, state.c, rule)
    mu_q = effective_viscosity(coeffs.viscosity, cq, J2[:, None])
    c_cent = state.c[mesh.triangles].mean(axis=1)
    mu_c = effective_viscosity(coeffs.viscosity, c_cent, J2)
    return mu_q, mu_c, gu


def build_step_context(mesh: Mesh, state_prev: FieldState, subs_prev: SubscaleField,
                       coeffs: CoefficientSet, dt: float, t_new: float,
                       stab: StabilizationSettings = StabilizationSettings(),
                       rule: QuadratureRule = DEFAULT_RULE, convect: FieldState | None = None,
                       ) -> StepContext:
    """Sample lagged fields and t^{n+1} data; ``convect`` overrides the frozen state (Picard)."""
    frozen = state_prev if convect is None else convect
    X = qp_coordinates(mesh, rule)
    x, y = X[..., 0], X[..., 1]
    W = qp_weights(mesh, rule)
    a = np.stack([qp_values(mesh, frozen.u1, rule), qp_values(mesh, frozen.u2, rule)], axis=-1)
    mu_q, mu_cent, gu = lagged_viscosity(mesh, frozen, coeffs, rule)
    diva = gu[:, 0, 0] + gu[:, 1, 1]
    D1, D2, g1, g2 = coeffs.diffusion(x, y, t_new)
    f1, f2 = coeffs.body_force(x, y, t_new)
    fT = coeffs.source(x, y, t_new)
    for arr in (mu_q, D1, D2, g1, g2, f1, f2, fT):
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError("non-finite coefficient evaluation at quadrature points")

    cen = mesh.centroids()
    speed = np.hypot(frozen.u1[mesh.triangles].mean(axis=1), frozen.u2[mesh.triangles].mean(axis=1))
    d1c, d2c, _, _ = coeffs.diffusion(cen[:, 0], cen[:, 1], t_new)
    D_m = np.maximum(np.abs(d1c), np.abs(d2c))
    tau1, tau2, tau3 = compute_tau(mesh.h_k, speed, 2.0 * mu_cent, coeffs.rho, D_m, coeffs.alpha,
                                   stab.c1, stab.c2, stab.c3)
    taub1, _, taub3 = compute_tau_bar(tau1, tau2, tau3, coeffs.rho, dt)
    if not stab.enabled:
        tau1 = tau2 = tau3 = taub1 = taub3 = np.zeros(mesh.n_el)

    un = np.stack([qp_values(mesh, state_prev.u1, rule), qp_values(mesh, state_prev.u2, rule)], axis=-1)
    return StepContext(
        N=rule.points, W=W, G=mesh.grads, a=a, diva=diva, mu=mu_q,
        D1=np.ascontiguousarray(D1), D2=np.ascontiguousarray(D2),
        gD=np.stack([g1, g2], axis=-1), f=np.stack([f1, f2], axis=-1), fT=np.ascontiguousarray(fT),
        un=un, cn=qp_values(mesh, state_prev.c, rule), usn=subs_prev.u, csn=subs_prev.c,
        tau1=tau1, tau2=tau2, tau3=tau3, taub1=taub1, taub3=taub3,
        rho=float(coeffs.rho), alpha=float(coeffs.alpha), dt=float(dt),
    )


def residual_from_context(mesh: Mesh, ctx: StepContext, state_new: FieldState,
                          rule: QuadratureRule = DEFAULT_RULE) -> ResidualSample:
    """Strong residual of the new P1 state at every quadrature point.

    Second derivatives of P1 fields vanish inside elements, so only the
    first-order part of the variable-diffusion operator survives.
    """
    u = np.stack([qp_values(mesh, state_new.u1, rule), qp_values(mesh, state_new.u2, rule)], axis=-1)
    gu = np.stack([element_gradients(mesh, state_new.u1), element_gradients(mesh, state_new.u2)], axis=1)
    gp = element_gradients(mesh, state_new.p)
    gc = element_gradients(mesh, state_new.c)
    c = qp_values(mesh, state_new.c, rule)
    rho, dt = ctx.rho, ctx.dt
    conv = np.einsum("kqj,kij->kqi", ctx.a, gu)
    R1 = ctx.f - rho * (u - ctx.un) / dt - rho * conv - gp[:, None, :]
    R2 = np.broadcast_to(-(gu[:, 0, 0] + gu[:, 1, 1])[:, None], c.shape).copy()
    a_dot_gc = np.einsum("kqd,kd->kq", ctx.a, gc)
    gD_dot_gc = np.einsum("kqd,kd->kq", ctx.gD, gc)
    R3 = ctx.fT - (c - ctx.cn) / dt - a_dot_gc - ctx.alpha * c + gD_dot_gc
    return ResidualSample(R1, R2, R3)


def strong_residual(mesh: Mesh, state_prev: FieldState, state_new: FieldState,
                    coeffs: CoefficientSet, dt: float, k=None, q=None,
                    rule: QuadratureRule = DEFAULT_RULE) -> ResidualSample:
    """Residual ``F - M dU/dt - L(u^n, mu^n; U^{n+1})``; one sample if ``k, q`` given."""
    subs = SubscaleField.zeros(mesh.n_el, rule.n)
    ctx = build_step_context(mesh, state_prev, subs, coeffs, dt, state_new.t,
                             StabilizationSettings(enabled=False), rule)
    res = residual_from_context(mesh, ctx, state_new, rule)
    for arr in (res.R1, res.R2, res.R3):
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError("non-finite strong residual")
    if k is None:
        return res
    return res.at(k, q)


def advance_subscales(subs_prev: SubscaleField, residual: ResidualSample, taub1, tau2, taub3,
                      rho: float, dt: float) -> SubscaleField:
    """Backward Euler update of the dynamic subscales; tau arrays are per element."""
    tb1 = np.asarray(taub1, dtype=float)
    t2 = np.asarray(tau2, dtype=float)
    tb3 = np.asarray(taub3, dtype=float)
    if tb1.ndim == 1:
        tb1, t2, tb3 = tb1[:, None], t2[:, None], tb3[:, None]
    u = tb1[..., None] * (residual.R1 + (rho / dt) * subs_prev.u)
    p = t2 * residual.R2
    c = tb3 * (residual.R3 + subs_prev.c / dt)
    return SubscaleField(u, np.broadcast_to(p, subs_prev.p.shape).copy(), c)
