"""Compare the numba and numpy element kernels.

    python3 benchmarks/bench_kernels.py [--ndiv 20,40,80] [--repeat 5]

Times the local coupled-system kernel and the convection kernel for one time
step of the weak_const manufactured case, after a warm-up call that absorbs
JIT compilation. Prints a table and checks that both backends agree.
"""
import argparse
import time

import numpy as np

from casson_asgs import kernels
from casson_asgs.assembly import assemble_from_context
from casson_asgs.fe import DEFAULT_RULE, qp_weights
from casson_asgs.manufactured import make_case
from casson_asgs.mesh import build_structured_mesh
from casson_asgs.solver import initial_state
from casson_asgs.stabilization import StabilizationSettings, SubscaleField, build_step_context


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench(n, repeat):
    case = make_case("weak_const")
    coeffs = case.coefficients()
    mesh = build_structured_mesh(n)
    state = initial_state(mesh, coeffs, case.exact_state_fields())
    subs = SubscaleField.zeros(mesh.n_el, DEFAULT_RULE.n)
    dt = 1.0 / n
    ctx = build_step_context(mesh, state, subs, coeffs, dt, dt, StabilizationSettings(), DEFAULT_RULE)
    W = qp_weights(mesh, DEFAULT_RULE)
    row = {"n_div": n, "elements": mesh.n_el}
    results = {}
    for backend in ("numpy", "numba"):
        kernels.local_system(ctx, backend)  # warm-up / compile
        t_local, (Ke, _) = best_of(lambda: kernels.local_system(ctx, backend), repeat)
        t_conv, C = best_of(lambda: kernels.galerkin_convection(ctx.N, W, mesh.grads, ctx.a, ctx.diva,
                                                                ctx.rho, backend), repeat)
        t_asm, _ = best_of(lambda: assemble_from_context(mesh, ctx, backend), repeat)
        row[f"{backend}_local"], row[f"{backend}_conv"], row[f"{backend}_assembly"] = t_local, t_conv, t_asm
        results[backend] = (Ke, C)
    scale = max(1.0, float(np.max(np.abs(results["numpy"][0]))))
    row["max_diff"] = max(float(np.max(np.abs(results["numpy"][0] - results["numba"][0]))) / scale,
                          float(np.max(np.abs(results["numpy"][1] - results["numba"][1]))))
    return row


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ndiv", default="20,40,80")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    print(f"{'n_div':>6} {'elements':>9} {'kernel numpy':>13} {'kernel numba':>13} {'speedup':>8} "
          f"{'assembly numpy':>15} {'assembly numba':>15} {'max rel diff':>13}")
    for n in (int(s) for s in args.ndiv.split(",")):
        r = bench(n, args.repeat)
        print(f"{r['n_div']:>6} {r['elements']:>9} {r['numpy_local']:>12.4f}s {r['numba_local']:>12.4f}s "
              f"{r['numpy_local'] / r['numba_local']:>7.1f}x {r['numpy_assembly']:>14.4f}s "
              f"{r['numba_assembly']:>14.4f}s {r['max_diff']:>13.2e}")


if __name__ == "__main__":
    main()
