"""Manufactured solutions for the convergence studies and their forcing terms.

Exact fields are written once as sympy expressions; all derivatives needed by
the forcing and by the error norms are taken symbolically and lambdified.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy as sym

from .coefficients import CoefficientSet, constant
from .rheology import ViscosityModel, compute_J2, effective_viscosity, viscosity_partials

X, Y, T = sym.symbols("x y t", real=True)

U1 = sym.exp(-T) * X**2 * (X - 1) ** 2 * Y * (Y - 1) * (2 * Y - 1)
U2 = -sym.exp(-T) * X * (X - 1) * (2 * X - 1) * Y**2 * (Y - 1) ** 2
P = sym.exp(-T) * (3 * X**2 + 3 * Y**2 - 2)
C = sym.exp(-T) * X * Y * (X - 1) * (Y - 1)
D1_VAR = sym.exp(-T) * Y**2 * (Y - 1) ** 2 * (2 * Y - 1) ** 2 * X**4 * (X - 1) ** 4
D2_VAR = sym.exp(-T) * X**2 * (X - 1) ** 2 * (2 * X - 1) ** 2 * Y**4 * (Y - 1) ** 4

SCENARIOS = ("weak_const", "weak_casson_k", "strong_linear_c", "strong_exp_c")


def _lambdify(expr):
    fn = sym.lambdify((X, Y, T), expr, modules="numpy")

    def wrapped(x, y, t):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(np.asarray(fn(x, y, t), dtype=float), np.broadcast(x, y).shape).copy()

    return wrapped


@dataclass
class ManufacturedCase:
    """Closed-form solution plus the coefficient scenario it is run under."""

    name: str
    viscosity: ViscosityModel
    rho: float = 1.0
    alpha: float = 0.01
    D1: object = 0.01
    D2: object = 0.01
    u1: object = U1
    u2: object = U2
    p: object = P
    c: object = C
    Re: float | None = None
    extra: dict = field(default_factory=dict)

    # ---- lambdified exact fields -------------------------------------------

    @cached_property
    def _fns(self) -> dict:
        e = {"u1": sym.sympify(self.u1), "u2": sym.sympify(self.u2), "p": sym.sympify(self.p),
             "c": sym.sympify(self.c), "D1": sym.sympify(self.D1), "D2": sym.sympify(self.D2)}
        out = {}
        for k, ex in e.items():
            out[k] = _lambdify(ex)
            out[k + "_t"] = _lambdify(sym.diff(ex, T))
            for a, va in (("x", X), ("y", Y)):
                d = sym.diff(ex, va)
                out[f"{k}_{a}"] = _lambdify(d)
                for b, vb in (("x", X), ("y", Y)):
                    out[f"{k}_{a}{b}"] = _lambdify(sym.diff(d, vb))
        return out

    def field(self, name: str):
        """Vectorised callable ``(x, y, t)`` for a field or derivative, e.g. ``"u1_xy"``."""
        return self._fns[name]

    def grad(self, name: str):
        fx, fy = self._fns[name + "_x"], self._fns[name + "_y"]
        return lambda x, y, t: (fx(x, y, t), fy(x, y, t))

    def exact_state_fields(self):
        return {k: self._fns[k] for k in ("u1", "u2", "p", "c")}

    def is_constant_diffusion(self) -> bool:
        return sym.sympify(self.D1).is_number and sym.sympify(self.D2).is_number

    # ---- forcing --------------------------------------------------------------

    def forcing(self, x, y, t):
        """Return ``(f1, f2, fT)`` making the exact fields solve the strong system."""
        f = self._fns
        u = [f["u1"](x, y, t), f["u2"](x, y, t)]
        du = [[f["u1_x"](x, y, t), f["u1_y"](x, y, t)], [f["u2_x"](x, y, t), f["u2_y"](x, y, t)]]
        ddu = [[[f[f"u{i + 1}_{a}{b}"](x, y, t) for b in "xy"] for a in "xy"] for i in range(2)]
        c = f["c"](x, y, t)
        dc = [f["c_x"](x, y, t), f["c_y"](x, y, t)]
        grad_u = np.stack([np.stack(du[0], -1), np.stack(du[1], -1)], -2)
        J2 = compute_J2(grad_u)
        mu = effective_viscosity(self.viscosity, c, J2)
        mu_c, mu_J = viscosity_partials(self.viscosity, c, J2)
        # d_j J2 for j = x, y
        shear = du[0][1] + du[1][0]
        dJ = [4 * du[0][0] * ddu[0][0][j] + 4 * du[1][1] * ddu[1][1][j]
              + 2 * shear * (ddu[0][1][j] + ddu[1][0][j]) for j in range(2)]
        dmu = [mu_c * dc[j] + mu_J * dJ[j] for j in range(2)]
        dp = [f["p_x"](x, y, t), f["p_y"](x, y, t)]
        out = []
        for i in range(2):
            acc = self.rho * f[f"u{i + 1}_t"](x, y, t)
            acc += self.rho * (u[0] * du[i][0] + u[1] * du[i][1])
            acc += dp[i]
            div_stress = 0.0
            for j in range(2):
                sij = du[i][j] + du[j][i]
                dsij = ddu[i][j][j] + ddu[j][i][j]
                div_stress = div_stress + dmu[j] * sij + mu * dsij
            out.append(acc - div_stress)
        D1, D2 = f["D1"](x, y, t), f["D2"](x, y, t)
        fT = (f["c_t"](x, y, t) - f["D1_x"](x, y, t) * dc[0] - D1 * f["c_xx"](x, y, t)
              - f["D2_y"](x, y, t) * dc[1] - D2 * f["c_yy"](x, y, t)
              + u[0] * dc[0] + u[1] * dc[1] + self.alpha * c)
        return out[0], out[1], fT

    def coefficients(self) -> CoefficientSet:
        f = self._fns
        if self.is_constant_diffusion():
            D1, D2 = constant(float(self.D1)), constant(float(self.D2))
            g1 = g2 = None
        else:
            D1, D2, g1, g2 = f["D1"], f["D2"], f["D1_x"], f["D2_y"]
        last = {}

        def forcing(x, y, t):
            # momentum and transport forcing are requested back to back on the same points
            if last.get("key") is not None and last["key"][0] is x and last["key"][1] is y \
                    and last["key"][2] == t:
                return last["val"]
            val = self.forcing(x, y, t)
            last["key"], last["val"] = (x, y, t), val
            return val

        return CoefficientSet(
            rho=self.rho, alpha=self.alpha, viscosity=self.viscosity, D1=D1, D2=D2,
            dD1_dx=g1, dD2_dy=g2,
            fF=lambda x, y, t: forcing(x, y, t)[:2],
            fT=lambda x, y, t: forcing(x, y, t)[2],
            dirichlet={"u1": f["u1"], "u2": f["u2"], "c": f["c"]},
        )


def manufactured_forcing(case: ManufacturedCase, x, y, t):
    """``(fF, fT)`` with ``fF = (f1, f2)`` at the given points."""
    f1, f2, fT = case.forcing(x, y, t)
    return np.stack([f1, f2], axis=-1), fT


def make_case(scenario: str, Re: float = 100.0, tau_y: float = 0.0, eps_J: float = 1e-10,
              **overrides) -> ManufacturedCase:
    """Registry of the manufactured test scenarios.

    ``weak_const``: eta = 1/Re, D1 = D2 = alpha = 0.01.
    ``weak_casson_k``: fitted Casson law with k0 = 0.1937, k1 = 0.055.
    ``strong_linear_c``: eta = 0.16 (1 + 0.25 c), variable D1, D2.
    ``strong_exp_c``: eta = 0.129 exp(0.101 c), variable D1, D2.
    """
    if scenario == "weak_const":
        if not Re > 0:
            raise ValueError("Re must be positive")
        visc = ViscosityModel("constant", eta=1.0 / Re, tau_y=tau_y, eps_J=eps_J)
        case = ManufacturedCase("weak_const", visc, Re=Re)
    elif scenario == "weak_casson_k":
        visc = ViscosityModel("casson_k", k0=overrides.pop("k0", 0.1937),
                              k1=overrides.pop("k1", 0.055), eps_J=eps_J)
        case = ManufacturedCase("weak_casson_k", visc)
    elif scenario == "strong_linear_c":
        visc = ViscosityModel("linear_c", eta0_p=overrides.pop("eta0_p", 0.16),
                              K=overrides.pop("K", 0.25), tau_y=tau_y, eps_J=eps_J)
        case = ManufacturedCase("strong_linear_c", visc, D1=D1_VAR, D2=D2_VAR)
    elif scenario == "strong_exp_c":
        visc = ViscosityModel("exp_c", A=overrides.pop("A", 0.129), B=overrides.pop("B", 0.101),
                              tau_y=tau_y, eps_J=eps_J)
        case = ManufacturedCase("strong_exp_c", visc, D1=D1_VAR, D2=D2_VAR)
    else:
        raise ValueError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    for k, v in overrides.items():
        if not hasattr(case, k):
            raise ValueError(f"unknown case override {k!r}")
        setattr(case, k, v)
    return case
