"""Element kernels for the stabilised coupled system.

Two interchangeable backends compute the same 12x12 local matrices and 12-entry
local load vectors (local dof ``4*a + var``, var = u1, u2, p, c):

* ``numba``: explicit loops compiled with ``@njit``;
* ``numpy``: vectorised ``einsum`` expressions.

The backend is chosen by the ``CASSON_ASGS_BACKEND`` environment variable
(``numba`` or ``numpy``); the default is numba when it imports.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


ENV_FLAG = "CASSON_ASGS_BACKEND"


def default_backend() -> str:
    choice = os.environ.get(ENV_FLAG, "numba" if HAVE_NUMBA else "numpy").strip().lower()
    if choice not in ("numba", "numpy"):
        raise ValueError(f"{ENV_FLAG} must be 'numba' or 'numpy', got {choice!r}")
    if choice == "numba" and not HAVE_NUMBA:
        return "numpy"
    return choice


# ---------------------------------------------------------------- numpy path


def _outer(A, B):
    return A[:, :, None] * B[:, None, :]


def galerkin_convection_numpy(N, W, G, a, diva, rho):
    """rho (a.grad u, v) + rho/2 (div a u, v), one velocity component, (n_el, 3, 3)."""
    aG = np.einsum("eqd,ebd->eqb", a, G)
    mass = np.einsum("eq,qa,qb->eab", W, N, N)
    return rho * np.einsum("eq,qa,eqb->eab", W, N, aG) + 0.5 * rho * diva[:, None, None] * mass


def local_system_numpy(N, W, G, a, diva, mu, D1, D2, gD, f, fT, un, cn, usn, csn,
                       taub1, tau2, taub3, rho, alpha, dt):
    E = W.shape[0]
    Ke = np.zeros((E, 3, 4, 3, 4))
    Fe = np.zeros((E, 3, 4))
    Gx, Gy = G[:, :, 0], G[:, :, 1]
    area = W.sum(axis=1)
    mass = np.einsum("eq,qa,qb->eab", W, N, N)
    Nint = np.einsum("eq,qa->ea", W, N)
    aG = np.einsum("eqd,ebd->eqb", a, G)
    conv = rho * np.einsum("eq,qa,eqb->eab", W, N, aG) + 0.5 * rho * diva[:, None, None] * mass
    tconv = np.einsum("eq,qa,eqb->eab", W, N, aG)
    mu_int = (W * mu).sum(axis=1)[:, None, None]
    GxGx, GyGy = _outer(Gx, Gx), _outer(Gy, Gy)
    GxGy, GyGx = _outer(Gx, Gy), _outer(Gy, Gx)

    # Galerkin part
    for i in (0, 1):
        Ke[:, :, i, :, i] += rho / dt * mass + conv
    Ke[:, :, 0, :, 0] += mu_int * (2 * GxGx + GyGy)
    Ke[:, :, 0, :, 1] += mu_int * GyGx
    Ke[:, :, 1, :, 0] += mu_int * GxGy
    Ke[:, :, 1, :, 1] += mu_int * (GxGx + 2 * GyGy)
    Ke[:, :, 0, :, 2] += -Gx[:, :, None] * Nint[:, None, :]
    Ke[:, :, 1, :, 2] += -Gy[:, :, None] * Nint[:, None, :]
    Ke[:, :, 2, :, 0] += Nint[:, :, None] * Gx[:, None, :]
    Ke[:, :, 2, :, 1] += Nint[:, :, None] * Gy[:, None, :]
    D1int = (W * D1).sum(axis=1)[:, None, None]
    D2int = (W * D2).sum(axis=1)[:, None, None]
    Ke[:, :, 3, :, 3] += mass / dt + D1int * GxGx + D2int * GyGy + alpha * mass + tconv

    Fe[:, :, 0] += np.einsum("eq,qa,eq->ea", W, N, f[..., 0] + rho / dt * un[..., 0])
    Fe[:, :, 1] += np.einsum("eq,qa,eq->ea", W, N, f[..., 1] + rho / dt * un[..., 1])
    Fe[:, :, 3] += np.einsum("eq,qa,eq->ea", W, N, fT + cn / dt)

    # momentum subscale tested with -L*(v, q) = rho a.grad v + grad q
    Sv = rho * aG
    T = rho / dt * N[None, :, :] + rho * aG
    t1 = taub1[:, None, None]
    S_uu = t1 * np.einsum("eq,eqa,eqb->eab", W, Sv, T)
    WSv = np.einsum("eq,eqa->ea", W, Sv)
    WT = np.einsum("eq,eqb->eb", W, T)
    for i in (0, 1):
        Gi = G[:, :, i]
        Ke[:, :, i, :, i] += S_uu
        Ke[:, :, i, :, 2] += t1 * WSv[:, :, None] * Gi[:, None, :]
        Ke[:, :, 2, :, i] += t1 * Gi[:, :, None] * WT[:, None, :]
    Ke[:, :, 2, :, 2] += t1 * area[:, None, None] * (GxGx + GyGy)
    # continuity subscale: tau2 (div u, div v)
    t2a = (tau2 * area)[:, None, None]
    Ke[:, :, 0, :, 0] += t2a * GxGx
    Ke[:, :, 0, :, 1] += t2a * GxGy
    Ke[:, :, 1, :, 0] += t2a * GyGx
    Ke[:, :, 1, :, 1] += t2a * GyGy
    # transport subscale
    gDG = np.einsum("eqd,ebd->eqb", gD, G)
    Ad = aG + gDG - alpha * N[None, :, :]
    Tc = (1.0 / dt + alpha) * N[None, :, :] + aG - gDG
    Ke[:, :, 3, :, 3] += taub3[:, None, None] * np.einsum("eq,eqa,eqb->eab", W, Ad, Tc)

    g = f + rho / dt * (un + usn)
    for i in (0, 1):
        Fe[:, :, i] += taub1[:, None] * np.einsum("eq,eqa,eq->ea", W, Sv, g[..., i])
    Wg = np.einsum("eq,eqd->ed", W, g)
    Fe[:, :, 2] += taub1[:, None] * np.einsum("ead,ed->ea", G, Wg)
    Fe[:, :, 3] += taub3[:, None] * np.einsum("eq,eqa,eq->ea", W, Ad, fT + (cn + csn) / dt)
    return Ke.reshape(E, 12, 12), Fe.reshape(E, 12)


# ---------------------------------------------------------------- numba path


@njit(cache=True)
def galerkin_convection_numba(N, W, G, a, diva, rho):
    E, nq = W.shape
    C = np.zeros((E, 3, 3))
    for e in range(E):
        for q in range(nq):
            w = W[e, q]
            for b in range(3):
                aGb = a[e, q, 0] * G[e, b, 0] + a[e, q, 1] * G[e, b, 1]
                for i in range(3):
                    C[e, i, b] += rho * w * N[q, i] * (aGb + 0.5 * diva[e] * N[q, b])
    return C


@njit(cache=True)
def local_system_numba(N, W, G, a, diva, mu, D1, D2, gD, f, fT, un, cn, usn, csn,
                       taub1, tau2, taub3, rho, alpha, dt):
    E, nq = W.shape
    Ke = np.zeros((E, 12, 12))
    Fe = np.zeros((E, 12))
    aG = np.empty(3)
    gDG = np.empty(3)
    Sv = np.empty(3)
    T = np.empty(3)
    Ad = np.empty(3)
    Tc = np.empty(3)
    for e in range(E):
        K = Ke[e]
        F = Fe[e]
        tb1 = taub1[e]
        tb3 = taub3[e]
        area = 0.0
        mu_int = 0.0
        d1_int = 0.0
        d2_int = 0.0
        for q in range(nq):
            w = W[e, q]
            area += w
            mu_int += w * mu[e, q]
            d1_int += w * D1[e, q]
            d2_int += w * D2[e, q]
            for b in range(3):
                aG[b] = a[e, q, 0] * G[e, b, 0] + a[e, q, 1] * G[e, b, 1]
                gDG[b] = gD[e, q, 0] * G[e, b, 0] + gD[e, q, 1] * G[e, b, 1]
                Sv[b] = rho * aG[b]
                T[b] = rho / dt * N[q, b] + rho * aG[b]
                Ad[b] = aG[b] + gDG[b] - alpha * N[q, b]
                Tc[b] = (1.0 / dt + alpha) * N[q, b] + aG[b] - gDG[b]
            g0 = f[e, q, 0] + rho / dt * (un[e, q, 0] + usn[e, q, 0])
            g1 = f[e, q, 1] + rho / dt * (un[e, q, 1] + usn[e, q, 1])
            gT = fT[e, q] + (cn[e, q] + csn[e, q]) / dt
            for i in range(3):
                Ni = N[q, i]
                for b in range(3):
                    Nb = N[q, b]
                    m = w * Ni * Nb
                    cv = rho * w * Ni * aG[b] + 0.5 * rho * diva[e] * m
                    suu = tb1 * w * Sv[i] * T[b]
                    for c in range(2):
                        K[4 * i + c, 4 * b + c] += rho / dt * m + cv + suu
                        K[4 * i + c, 4 * b + 2] += -G[e, i, c] * w * Nb + tb1 * w * Sv[i] * G[e, b, c]
                        K[4 * i + 2, 4 * b + c] += w * Ni * G[e, b, c] + tb1 * G[e, i, c] * w * T[b]
                    K[4 * i + 3, 4 * b + 3] += (m / dt + alpha * m + w * Ni * aG[b]
                                                + tb3 * w * Ad[i] * Tc[b])
                F[4 * i + 0] += w * Ni * (f[e, q, 0] + rho / dt * un[e, q, 0]) + tb1 * w * Sv[i] * g0
                F[4 * i + 1] += w * Ni * (f[e, q, 1] + rho / dt * un[e, q, 1]) + tb1 * w * Sv[i] * g1
                F[4 * i + 2] += tb1 * w * (G[e, i, 0] * g0 + G[e, i, 1] * g1)
                F[4 * i + 3] += w * Ni * (fT[e, q] + cn[e, q] / dt) + tb3 * w * Ad[i] * gT
        t2a = tau2[e] * area
        for i in range(3):
            gxi = G[e, i, 0]
            gyi = G[e, i, 1]
            for b in range(3):
                gxb = G[e, b, 0]
                gyb = G[e, b, 1]
                K[4 * i + 0, 4 * b + 0] += mu_int * (2 * gxi * gxb + gyi * gyb) + t2a * gxi * gxb
                K[4 * i + 0, 4 * b + 1] += mu_int * gyi * gxb + t2a * gxi * gyb
                K[4 * i + 1, 4 * b + 0] += mu_int * gxi * gyb + t2a * gyi * gxb
                K[4 * i + 1, 4 * b + 1] += mu_int * (gxi * gxb + 2 * gyi * gyb) + t2a * gyi * gyb
                K[4 * i + 2, 4 * b + 2] += tb1 * area * (gxi * gxb + gyi * gyb)
                K[4 * i + 3, 4 * b + 3] += d1_int * gxi * gxb + d2_int * gyi * gyb
    return Ke, Fe


_LOCAL = {"numpy": local_system_numpy, "numba": local_system_numba}
_CONV = {"numpy": galerkin_convection_numpy, "numba": galerkin_convection_numba}


def local_system(ctx, backend: str | None = None):
    """Local matrices and loads for every element of a :class:`StepContext`."""
    fn = _LOCAL[backend or default_backend()]
    c = np.ascontiguousarray
    return fn(c(ctx.N), c(ctx.W), c(ctx.G), c(ctx.a), c(ctx.diva), c(ctx.mu), c(ctx.D1), c(ctx.D2),
              c(ctx.gD), c(ctx.f), c(ctx.fT), c(ctx.un), c(ctx.cn), c(ctx.usn), c(ctx.csn),
              c(ctx.taub1), c(ctx.tau2), c(ctx.taub3), float(ctx.rho), float(ctx.alpha),
              float(ctx.dt))


def galerkin_convection(N, W, G, a, diva, rho, backend: str | None = None):
    fn = _CONV[backend or default_backend()]
    c = np.ascontiguousarray
    return fn(c(N), c(W), c(G), c(a), c(diva), float(rho))
