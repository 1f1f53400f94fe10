"""Command-line driver: convergence sweeps, cavity runs and single configured solves.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import config as cfgmod
from .cavity import (cavity_coefficients, centerline_profiles, compute_streamfunction,
                     write_profile_csv, write_streamfunction_csv)
from .config import ConfigError, RunConfig
from .io import write_table_csv, write_vtk
from .manufactured import ManufacturedCase, make_case
from .mesh import build_structured_mesh
from .rheology import ViscosityModel
from .solver import SimulationError, SolverSettings, run_steady_cavity, run_transient
from .stabilization import StabilizationSettings
from .verification import TABLE_HEADER, ErrorReport, roc_table, trajectory_error_norms

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

log = logging.getLogger("casson_asgs")

RAW_HEADER = ["case", "n_div", "dt", "e_u", "e_c", "e_p", "total", "total_sum", "status"]
CAVITY_HEADER = ["Re", "grid", "converged", "steps", "x_vortex", "y_vortex", "psi_extremum",
                 "distance_to_centre", "final_rate"]


def output_dir(cfg: RunConfig) -> Path:
    """Config output directory, or ``$CASSON_ASGS_OUTDIR/<name>`` when the variable is set."""
    base = os.environ.get(cfgmod.OUTDIR_ENV)
    path = Path(base) / cfg.name if base else Path(cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


LAW_PARAMS = {"constant": ("eta",), "casson_k": ("k0", "k1"), "linear_c": ("eta0_p", "K"),
              "exp_c": ("A", "B")}
SCENARIO_LAW = {"weak_const": "constant", "weak_casson_k": "casson_k", "strong_linear_c": "linear_c",
                "strong_exp_c": "exp_c"}


def build_case(cfg: RunConfig) -> ManufacturedCase:
    """Manufactured case for the config; parameters must belong to the active viscosity law."""
    kind = cfg.viscosity or SCENARIO_LAW[cfg.scenario]
    given = {k: getattr(cfg, k) for k in ("eta", "k0", "k1", "eta0_p", "K", "A", "B")
             if getattr(cfg, k) is not None}
    stray = sorted(set(given) - set(LAW_PARAMS[kind]))
    if stray:
        raise ConfigError(f"physics keys {stray} do not apply to the {kind} viscosity law")
    case = make_case(cfg.scenario, Re=cfg.Re, tau_y=cfg.tau_y, eps_J=cfg.eps_J)
    if kind == "constant" and "eta" not in given:
        given["eta"] = cfg.rho / cfg.Re
    case.viscosity = ViscosityModel(kind, tau_y=cfg.tau_y, eps_J=cfg.eps_J, **given)
    case.rho = cfg.rho
    if cfg.alpha is not None:
        case.alpha = cfg.alpha
    return case


def _settings(cfg: RunConfig):
    stab = StabilizationSettings(cfg.c1, cfg.c2, cfg.c3, enabled=cfg.stabilization)
    solver = SolverSettings(cfg.method, cfg.tol, cfg.max_iter, cfg.restart)
    backend = None if cfg.backend == "auto" else cfg.backend
    return stab, solver, backend


def _label(cfg: RunConfig) -> str:
    if cfg.scenario == "weak_const":
        return f"Re={cfg.Re:g}"
    return cfg.scenario


def format_table(header, rows) -> str:
    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(str(h).ljust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(str(c).ljust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(line.rstrip() for line in lines)


def run_convergence(cfg: RunConfig, echo=print) -> tuple:
    """Refinement sweep; returns ``(reports, table rows, output directory)``."""
    out = output_dir(cfg)
    case = build_case(cfg)
    stab, solver, backend = _settings(cfg)
    coeffs = case.coefficients()
    exact = case.exact_state_fields()
    reports = []
    for n in cfg.n_div:
        dt = cfg.dt_for(n)
        mesh = build_structured_mesh(n)
        log.info("%s: n_div=%d dt=%g", cfg.name, n, dt)
        try:
            run = run_transient(mesh, coeffs, dt, cfg.T, exact=exact, stab=stab, solver=solver,
                                retain=True, backend=backend)
            rep = trajectory_error_norms(run, case)
            rep.label = _label(cfg)
        except SimulationError as exc:
            log.error("%s n_div=%d failed: %s", cfg.name, n, exc)
            rep = ErrorReport(float("nan"), float("nan"), float("nan"), n_div=n, dt=dt,
                              label=_label(cfg), failed=str(exc))
        reports.append(rep)
    rows = roc_table(reports)
    write_table_csv(out / f"convergence_{cfg.name}.csv", TABLE_HEADER, rows)
    raw = [[r.label, r.n_div, repr(r.dt), repr(r.e_u), repr(r.e_c), repr(r.e_p), repr(r.total),
            repr(r.total_sum), "failed" if r.failed else "ok"] for r in reports]
    write_table_csv(out / f"convergence_{cfg.name}_raw.csv", RAW_HEADER, raw)
    echo(format_table(TABLE_HEADER, rows))
    return reports, rows, out


def run_cavity(cfg: RunConfig, echo=print) -> tuple:
    """Steady lid-driven cavity at each Reynolds number of the config."""
    if not cfg.re_list:
        raise ConfigError("cavity.re must list at least one Reynolds number")
    out = output_dir(cfg)
    stab, solver, backend = _settings(cfg)
    mesh = build_structured_mesh(cfg.grid)
    rows, results = [], []
    for Re in cfg.re_list:
        coeffs = cavity_coefficients(Re, rho=cfg.rho, tau_y=cfg.tau_y)
        res = run_steady_cavity(mesh, Re, cfg.pseudo_dt, cfg.tol_steady, cfg.max_steps, coeffs=coeffs,
                                stab=stab, solver=solver, backend=backend)
        sf = compute_streamfunction(mesh, res.state)
        tag = f"re{Re:g}"
        write_vtk(mesh, res.state, out / f"cavity_{tag}.vtk", title=f"lid-driven cavity Re={Re:g}")
        write_streamfunction_csv(out / f"cavity_{tag}_psi.csv", sf)
        (ys, u1), (xs, u2) = centerline_profiles(mesh, res.state)
        write_profile_csv(out / f"cavity_{tag}_u1_x0.5.csv", "y", "u1", ys, u1)
        write_profile_csv(out / f"cavity_{tag}_u2_y0.5.csv", "x", "u2", xs, u2)
        x, y = sf.centre
        rows.append([f"{Re:g}", str(cfg.grid), "yes" if res.converged else "no", str(res.steps),
                     f"{x:.6f}", f"{y:.6f}", f"{sf.extremum:.6e}", f"{sf.distance_to_centre():.6f}",
                     f"{res.history[-1]:.3e}"])
        if not res.converged:
            log.error("cavity Re=%g did not reach steady state in %d steps", Re, res.steps)
        results.append((Re, res, sf))
    write_table_csv(out / "cavity_summary.csv", CAVITY_HEADER, rows)
    echo(format_table(CAVITY_HEADER, rows))
    return results, rows, out


def run_solve(cfg: RunConfig, echo=print) -> tuple:
    """Single transient manufactured run on the first ``n_div`` entry."""
    out = output_dir(cfg)
    case = build_case(cfg)
    stab, solver, backend = _settings(cfg)
    n = cfg.n_div[0]
    dt = cfg.dt_for(n)
    mesh = build_structured_mesh(n)
    run = run_transient(mesh, case.coefficients(), dt, cfg.T, exact=case.exact_state_fields(),
                        stab=stab, solver=solver, retain=cfg.retain_trajectory, backend=backend)
    write_vtk(mesh, run.final, out / f"solve_{cfg.name}_final.vtk", title=f"{cfg.name} t={run.final.t:g}")
    hist = [[str(i + 1), repr((i + 1) * dt), repr(a), repr(b), repr(c), repr(e)]
            for i, ((a, b, c), e) in enumerate(zip(run.residual_norms, run.energies[1:]))]
    write_table_csv(out / f"solve_{cfg.name}_history.csv",
                    ["step", "t", "res_momentum", "res_continuity", "res_transport", "energy"], hist)
    rep = None
    if cfg.retain_trajectory:
        rep = trajectory_error_norms(run, case)
        write_table_csv(out / f"solve_{cfg.name}_errors.csv", RAW_HEADER[:-1],
                        [[_label(cfg), n, repr(dt), repr(rep.e_u), repr(rep.e_c), repr(rep.e_p),
                          repr(rep.total), repr(rep.total_sum)]])
        echo(f"{_label(cfg)} n_div={n} dt={dt:g}: e_u={rep.e_u:.3e} e_c={rep.e_c:.3e} "
             f"e_p={rep.e_p:.3e} total={rep.total:.3e}")
    return run, rep, out


def execute(cfg: RunConfig, echo=print) -> int:
    if cfg.command == "convergence":
        reports, _, _ = run_convergence(cfg, echo)
        return EXIT_NUMERICAL if any(r.failed for r in reports) else EXIT_OK
    if cfg.command == "cavity":
        results, _, _ = run_cavity(cfg, echo)
        return EXIT_OK if all(r.converged for _, r, _ in results) else EXIT_NUMERICAL
    run_solve(cfg, echo)
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="casson-asgs", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("convergence", help="space-time refinement study of a manufactured case")
    c.add_argument("--preset", required=True, help="preset name, e.g. weak_const_re100")
    c.add_argument("--ndiv", help="comma-separated list of mesh divisions")
    k = sub.add_parser("cavity", help="steady lid-driven cavity sweep")
    k.add_argument("--re", default="100,400,1000", help="comma-separated Reynolds numbers")
    k.add_argument("--grid", type=int, default=64)
    k.add_argument("--preset", default="cavity")
    s = sub.add_parser("solve", help="run the command described by a configuration file")
    s.add_argument("--config", required=True)
    sub.add_parser("presets", help="list the shipped presets")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "presets":
            print("\n".join(cfgmod.preset_names()))
            return EXIT_OK
        if args.command == "convergence":
            cfg = cfgmod.load_preset(args.preset)
            if cfg.command != "convergence":
                raise ConfigError(f"preset {args.preset!r} is a {cfg.command} preset")
            if args.ndiv:
                cfg = cfg.replace(n_div=cfgmod._ints(args.ndiv, "--ndiv"))
        elif args.command == "cavity":
            cfg = cfgmod.load_preset(args.preset).replace(
                command="cavity", re_list=cfgmod._floats(args.re, "--re"), grid=args.grid)
        else:
            cfg = cfgmod.load(args.config)
        return execute(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
