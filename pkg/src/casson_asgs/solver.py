"""Linear solves and time marching of the stabilised coupled system."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import apply_dirichlet, assemble_from_context, dirichlet_constraints
from .coefficients import CoefficientSet
from .fe import (DEFAULT_RULE, FieldState, QuadratureRule, domain_mean, interpolate, qp_values,
                 qp_weights)
from .mesh import Mesh
from .stabilization import (StabilizationSettings, SubscaleField, advance_subscales,
                            build_step_context, residual_from_context)

log = logging.getLogger(__name__)

DIRECT_MAX_NDIV = 128


class LinearSolveError(RuntimeError):
    def __init__(self, msg, history=None):
        super().__init__(msg)
        self.history = history or []


class SimulationError(RuntimeError):
    def __init__(self, msg, step=None, history=None):
        super().__init__(msg if step is None else f"step {step}: {msg}")
        self.step = step
        self.history = history or []


@dataclass(frozen=True)
class SolverSettings:
    method: str = "auto"  # auto | direct | gmres
    tol: float = 1e-9
    max_iter: int = 2000
    restart: int = 50

    def resolve(self, n_div: int) -> str:
        if self.method == "auto":
            return "direct" if n_div <= DIRECT_MAX_NDIV else "gmres"
        if self.method not in ("direct", "gmres"):
            raise ValueError(f"unknown linear solver {self.method!r}")
        return self.method


def solve_linear(matrix, rhs, method: str = "direct", tol: float = 1e-9, max_iter: int = 2000,
                 restart: int = 50) -> np.ndarray:
    """Solve ``A x = b`` by sparse LU or by ILU-preconditioned GMRES."""
    A = sp.csc_matrix(matrix)
    b = np.asarray(rhs, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise ValueError(f"incompatible system shapes {A.shape} and {b.shape}")
    if not (np.all(np.isfinite(A.data)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite entries in linear system")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b)
    if method == "direct":
        res = np.inf
        # symmetric-pattern ordering with diagonal pivots first (low fill); partial pivoting as fallback
        for permc, thresh in (("MMD_AT_PLUS_A", 0.0), ("COLAMD", 1.0)):
            try:
                lu = spla.splu(A, permc_spec=permc, diag_pivot_thresh=thresh)
            except RuntimeError as exc:
                raise LinearSolveError(f"singular matrix: {exc}") from exc
            x = lu.solve(b)
            r = b - A @ x
            if np.linalg.norm(r) > 1e-10 * bnorm:
                x = x + lu.solve(r)  # one step of iterative refinement
                r = b - A @ x
            res = np.linalg.norm(r) / bnorm
            if np.isfinite(res) and res <= 1e-10:
                return x
        raise LinearSolveError(f"direct solve residual {res:.3e} exceeds 1e-10", [res])
    if method == "gmres":
        ilu = spla.spilu(A, drop_tol=0.0, fill_factor=1.0)
        M = spla.LinearOperator(A.shape, ilu.solve)
        history: list = []
        x, info = spla.gmres(A, b, rtol=tol, atol=0.0, restart=restart, maxiter=max_iter, M=M,
                             callback=history.append, callback_type="pr_norm")
        res = np.linalg.norm(b - A @ x) / bnorm
        if info != 0 or res > tol * 10:
            raise LinearSolveError(f"GMRES stagnated (info={info}, residual {res:.3e})", history)
        return x
    raise ValueError(f"unknown method {method!r}")


@dataclass
class TransientRun:
    """Trajectory of a transient run; ``states[n].t == n * dt``."""

    mesh: Mesh
    dt: float
    T: float
    states: list = field(default_factory=list)
    subscales: Optional[SubscaleField] = None
    residual_norms: list = field(default_factory=list)
    energies: list = field(default_factory=list)

    @property
    def final(self) -> FieldState:
        return self.states[-1]


def n_steps(dt: float, T: float) -> int:
    N = T / dt
    n = int(round(N))
    if n < 1 or abs(N - n) > 1e-9 * max(1.0, N):
        raise ValueError(f"T/dt = {N} must be a positive integer")
    return n


def initial_state(mesh: Mesh, coeffs: CoefficientSet, exact: dict | None = None) -> FieldState:
    if exact is not None:
        return FieldState(*(interpolate(mesh, exact[k], 0.0) for k in ("u1", "u2", "p", "c")), t=0.0)
    st = FieldState.zeros(mesh.n_nodes, 0.0)
    bn = mesh.boundary_nodes
    x, y = mesh.nodes[bn, 0], mesh.nodes[bn, 1]
    st.u1[bn] = coeffs.boundary_value("u1", x, y, 0.0)
    st.u2[bn] = coeffs.boundary_value("u2", x, y, 0.0)
    st.c[bn] = coeffs.boundary_value("c", x, y, 0.0)
    return st


def energy(mesh: Mesh, state: FieldState, subs: SubscaleField, rho: float,
           rule: QuadratureRule = DEFAULT_RULE) -> float:
    """``rho |u_h|^2 + |c_h|^2 + |u~|^2 + |c~|^2`` with consistent quadrature."""
    W = qp_weights(mesh, rule)
    u1, u2, c = (qp_values(mesh, f, rule) for f in (state.u1, state.u2, state.c))
    su, _, sc = subs.l2_sq(W)
    return float(rho * np.sum(W * (u1**2 + u2**2)) + np.sum(W * c**2) + su + sc)


def time_step(mesh: Mesh, state: FieldState, subs: SubscaleField, coeffs: CoefficientSet,
              dt: float, stab: StabilizationSettings, solver: SolverSettings,
              rule: QuadratureRule = DEFAULT_RULE, n_picard: int = 1, backend=None):
    """One backward Euler step: assemble, solve, shift pressure mean, advance subscales."""
    t_new = state.t + dt
    method = solver.resolve(mesh.n_div)
    convect = None
    for _ in range(max(1, n_picard)):
        ctx = build_step_context(mesh, state, subs, coeffs, dt, t_new, stab, rule, convect=convect)
        system = assemble_from_context(mesh, ctx, backend)
        system = apply_dirichlet(system, dirichlet_constraints(mesh, coeffs, t_new), 0)
        x = solve_linear(system.matrix, system.rhs, method, solver.tol, solver.max_iter, solver.restart)
        new = FieldState.from_vector(x, t_new)
        new = FieldState(new.u1, new.u2, new.p - domain_mean(mesh, new.p), new.c, t_new)
        convect = new
    res = residual_from_context(mesh, ctx, new, rule)
    subs_new = advance_subscales(subs, res, ctx.taub1, ctx.tau2, ctx.taub3, coeffs.rho, dt)
    return new, subs_new, res, ctx


def run_transient(mesh: Mesh, coeffs: CoefficientSet, dt: float, T: float, exact: dict | None = None,
                  observers: tuple = (), stab: StabilizationSettings = StabilizationSettings(),
                  solver: SolverSettings = SolverSettings(), retain: bool = True,
                  initial: FieldState | None = None, rule: QuadratureRule = DEFAULT_RULE,
                  backend=None) -> TransientRun:
    """March from t = 0 to T; observers get ``(n, state, subs, info)`` after each step."""
    N = n_steps(dt, T)
    state = initial if initial is not None else initial_state(mesh, coeffs, exact)
    subs = SubscaleField.zeros(mesh.n_el, rule.n)
    run = TransientRun(mesh, dt, T, states=[state] if retain else [])
    W = qp_weights(mesh, rule)
    run.energies.append(energy(mesh, state, subs, coeffs.rho, rule))
    for n in range(N):
        try:
            state_new, subs, res, ctx = time_step(mesh, state, subs, coeffs, dt, stab, solver, rule,
                                                  backend=backend)
        except (LinearSolveError, FloatingPointError, ValueError) as exc:
            raise SimulationError(str(exc), step=n + 1,
                                  history=getattr(exc, "history", None)) from exc
        if not all(np.all(np.isfinite(v)) for v in (state_new.u1, state_new.u2, state_new.p, state_new.c)):
            raise SimulationError("NaN detected in solution", step=n + 1)
        prev = state
        # the new level is n+1; guard against drift from repeated float addition
        state = state_new.with_time((n + 1) * dt)
        rn = (float(np.sqrt(np.sum(W * (res.R1**2).sum(-1)))), float(np.sqrt(np.sum(W * res.R2**2))),
              float(np.sqrt(np.sum(W * res.R3**2))))
        run.residual_norms.append(rn)
        run.energies.append(energy(mesh, state, subs, coeffs.rho, rule))
        if retain:
            run.states.append(state)
        elif n == N - 1:
            run.states.append(state)
        for obs in observers:
            obs(n + 1, state, subs, {"residual_norms": rn, "context": ctx, "state_prev": prev})
    run.subscales = subs
    return run


@dataclass
class SteadyResult:
    state: FieldState
    steps: int
    converged: bool
    history: list


def run_steady_cavity(mesh: Mesh, Re: float, pseudo_dt: float = 1.0, tol_steady: float = 1e-6,
                      max_steps: int = 500, coeffs: CoefficientSet | None = None,
                      stab: StabilizationSettings = StabilizationSettings(),
                      solver: SolverSettings = SolverSettings(), n_picard: int = 1,
                      rule: QuadratureRule = DEFAULT_RULE, backend=None) -> SteadyResult:
    """Pseudo-transient continuation to the steady lid-driven cavity flow (eta = 1/Re)."""
    from .cavity import cavity_coefficients

    if coeffs is None:
        coeffs = cavity_coefficients(Re)
    state = initial_state(mesh, coeffs)
    subs = SubscaleField.zeros(mesh.n_el, rule.n)
    history = []
    for n in range(1, max_steps + 1):
        new, subs, _, _ = time_step(mesh, state, subs, coeffs, pseudo_dt, stab, solver, rule,
                                    n_picard=n_picard, backend=backend)
        change = max(np.abs(new.u1 - state.u1).max(), np.abs(new.u2 - state.u2).max())
        history.append(float(change / pseudo_dt))
        state = new
        if not np.isfinite(change):
            raise SimulationError("NaN detected in cavity iteration", step=n, history=history)
        log.debug("cavity Re=%g step %d du/dt=%.3e", Re, n, history[-1])
        if change < tol_steady * pseudo_dt:
            return SteadyResult(state, n, True, history)
    return SteadyResult(state, max_steps, False, history)
