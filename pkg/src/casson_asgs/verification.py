"""Trajectory error norms, convergence tables and a residual error indicator."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fe import DEFAULT_RULE, QuadratureRule, l2_and_h1_seminorm, qp_weights
from .manufactured import ManufacturedCase
from .solver import TransientRun
from .stabilization import ResidualSample


@dataclass
class PbarQbarNorms:
    """Accumulated pieces of the trajectory norms.

    ``pbar_sq = max_n |f^{n+1}|^2 + dt sum_n (|f^{n+1}|^2 + |f_x^{n+1}|^2 + |f_y^{n+1}|^2)``
    and ``qbar_sq = dt sum_n |g^{n+1}|^2`` (single dt factor).
    """

    max_l2_sq: float = 0.0
    accum_h1_sq: float = 0.0
    qbar_sq: float = 0.0

    @property
    def pbar_sq(self) -> float:
        return self.max_l2_sq + self.accum_h1_sq


def pbar_norm_sq(l2_sq, h1semi_sq, dt: float) -> float:
    """P-bar norm squared from per-level squared L2 norms and H1 seminorms (levels 1..N)."""
    l2_sq = np.asarray(l2_sq, dtype=float)
    h1semi_sq = np.asarray(h1semi_sq, dtype=float)
    if l2_sq.size == 0:
        raise ValueError("no time levels")
    return float(l2_sq.max() + dt * np.sum(l2_sq + h1semi_sq))


def qbar_norm_sq(l2_sq, dt: float) -> float:
    l2_sq = np.asarray(l2_sq, dtype=float)
    if l2_sq.size == 0:
        raise ValueError("no time levels")
    return float(dt * np.sum(l2_sq))


@dataclass
class ErrorReport:
    e_u: float
    e_p: float
    e_c: float
    n_div: int = 0
    dt: float = 0.0
    label: str = ""
    roc_u: float | None = None
    roc_p: float | None = None
    roc_c: float | None = None
    roc_total: float | None = None
    roc_total_sum: float | None = None
    failed: str | None = None
    norms: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return math.sqrt(self.e_u**2 + self.e_p**2 + self.e_c**2)

    @property
    def total_sum(self) -> float:
        return self.e_u + self.e_p + self.e_c


def trajectory_error_norms(run: TransientRun, case: ManufacturedCase,
                           rule: QuadratureRule = DEFAULT_RULE) -> ErrorReport:
    """Velocity and concentration errors in the P-bar norm, pressure in Q-bar."""
    N = int(round(run.T / run.dt))
    if len(run.states) != N + 1:
        raise ValueError(f"run retained {len(run.states)} levels, need {N + 1} (retain=True)")
    mesh, dt = run.mesh, run.dt
    f = case.exact_state_fields()
    u_l2, u_h1, c_l2, c_h1, p_l2 = [], [], [], [], []
    for st in run.states[1:]:
        l2a, h1a = l2_and_h1_seminorm(mesh, st.u1, f["u1"], case.grad("u1"), st.t, rule)
        l2b, h1b = l2_and_h1_seminorm(mesh, st.u2, f["u2"], case.grad("u2"), st.t, rule)
        u_l2.append(l2a**2 + l2b**2)
        u_h1.append(h1a**2 + h1b**2)
        l2c, h1c = l2_and_h1_seminorm(mesh, st.c, f["c"], case.grad("c"), st.t, rule)
        c_l2.append(l2c**2)
        c_h1.append(h1c**2)
        l2p, _ = l2_and_h1_seminorm(mesh, st.p, f["p"], case.grad("p"), st.t, rule)
        p_l2.append(l2p**2)
    e_u = math.sqrt(pbar_norm_sq(u_l2, u_h1, dt))
    e_c = math.sqrt(pbar_norm_sq(c_l2, c_h1, dt))
    e_p = math.sqrt(qbar_norm_sq(p_l2, dt))
    return ErrorReport(e_u, e_p, e_c, n_div=mesh.n_div, dt=dt, label=case.name,
                       norms={"u": PbarQbarNorms(max(u_l2), dt * sum(a + b for a, b in zip(u_l2, u_h1))),
                              "c": PbarQbarNorms(max(c_l2), dt * sum(a + b for a, b in zip(c_l2, c_h1))),
                              "p": PbarQbarNorms(qbar_sq=dt * sum(p_l2))})


def rate(e_coarse, e_fine) -> float | None:
    if e_coarse is None or e_fine is None or not (e_coarse > 0 and e_fine > 0):
        return None
    return math.log2(e_coarse / e_fine)


TABLE_HEADER = ["case", "dt", "1/h", "e_u", "RoC_u", "e_c", "RoC_c", "e_p", "RoC_p",
                "total", "RoC_total", "total_sum", "RoC_total_sum"]


def fmt_err(v) -> str:
    """Three significant digits in the ``4.48e-3`` style."""
    if v is None or not np.isfinite(v):
        return ""
    mant, exp = f"{v:.2e}".split("e")
    return f"{mant}e{int(exp)}"


def fmt_roc(v) -> str:
    return "" if v is None else f"{v:.3f}"


def roc_table(reports: list) -> list:
    """Attach rates to successive reports (each a 2x refinement) and return table rows."""
    rows = []
    prev = None
    for r in reports:
        if prev is not None and r.failed is None and prev.failed is None:
            r.roc_u = rate(prev.e_u, r.e_u)
            r.roc_p = rate(prev.e_p, r.e_p)
            r.roc_c = rate(prev.e_c, r.e_c)
            r.roc_total = rate(prev.total, r.total)
            r.roc_total_sum = rate(prev.total_sum, r.total_sum)
        if r.failed is not None:
            rows.append([r.label, f"1/{round(1 / r.dt)}" if r.dt else "", str(r.n_div)]
                        + [""] * 9 + [f"FAILED: {r.failed}"])
        else:
            rows.append([
                r.label, f"1/{round(1 / r.dt)}", str(r.n_div),
                fmt_err(r.e_u), fmt_roc(r.roc_u), fmt_err(r.e_c), fmt_roc(r.roc_c),
                fmt_err(r.e_p), fmt_roc(r.roc_p), fmt_err(r.total), fmt_roc(r.roc_total),
                fmt_err(r.total_sum), fmt_roc(r.roc_total_sum),
            ])
        prev = r
    return rows


def error_indicator(mesh, residual: ResidualSample, rule: QuadratureRule = DEFAULT_RULE) -> np.ndarray:
    """``eta_k = h_k * |(R1, R2, R3)|_{L2(element k)}`` from quadrature-point residuals."""
    W = qp_weights(mesh, rule)
    dens = (residual.R1**2).sum(axis=-1) + residual.R2**2 + residual.R3**2
    return mesh.h_k * np.sqrt(np.sum(W * dens, axis=1))


def exact_state(mesh, case: ManufacturedCase, t: float):
    from .fe import FieldState, interpolate

    f = case.exact_state_fields()
    return FieldState(*(interpolate(mesh, f[k], t) for k in ("u1", "u2", "p", "c")), t=t)
