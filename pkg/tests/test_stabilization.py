import numpy as np
import pytest

from casson_asgs.coefficients import CoefficientSet, constant
from casson_asgs.fe import FieldState, interpolate, qp_coordinates
from casson_asgs.manufactured import make_case
from casson_asgs.mesh import build_structured_mesh
from casson_asgs.rheology import ViscosityModel
from casson_asgs.stabilization import (ResidualSample, StabilizationSettings, SubscaleField,
                                       advance_subscales, build_step_context, compute_tau,
                                       compute_tau_bar, strong_residual)


def test_tau_hand_values():
    t1, t2, t3 = compute_tau(0.1, 1.0, 1.0, 1.0, 0.01, 0.01)
    assert t1 == pytest.approx(1 / 420, rel=1e-14)
    assert t2 == pytest.approx(1.05, rel=1e-14)
    assert t3 == pytest.approx(1 / 17.26, rel=1e-14)


def test_tau_bar_values_and_limits():
    tb1, tb2, tb3 = compute_tau_bar(1 / 420, 1.05, 0.05, 1.0, 0.1)
    assert tb1 == pytest.approx(2.3256e-3, rel=1e-4)
    assert tb2 == 1.05
    assert tb3 == pytest.approx(0.05 * 0.1 / 0.15)
    assert compute_tau_bar(1 / 420, 1, 1, 1.0, 1e9)[0] == pytest.approx(1 / 420, rel=1e-6)
    assert compute_tau_bar(1e9, 1, 1, 2.0, 0.1)[0] == pytest.approx(0.05, rel=1e-6)


def test_tau_bar_bounds(rng):
    tau = rng.uniform(1e-4, 10, 50)
    rho, dt = 1.3, 0.07
    tb1, _, tb3 = compute_tau_bar(tau, tau, tau, rho, dt)
    assert np.all(tb1 < np.minimum(dt / rho, tau)) and np.all(tb1 > 0)
    assert np.all(tb3 < np.minimum(dt, tau)) and np.all(tb3 > 0)


def test_tau_errors():
    with pytest.raises(ValueError):
        compute_tau(0.1, 0.0, 0.0, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        compute_tau_bar(1.0, 1.0, 1.0, 1.0, 0.0)


def test_tau_monotonicity():
    speeds = np.linspace(0, 5, 20)
    t1, _, t3 = compute_tau(0.1, speeds, 0.5, 1.0, 0.01, 0.01)
    assert np.all(np.diff(t1) <= 0) and np.all(np.diff(t3) <= 0)
    etas = np.linspace(0.01, 2, 20)
    t1, t2, _ = compute_tau(0.1, 1.0, etas, 1.0, 0.01, 0.01)
    assert np.all(np.diff(t1) <= 0) and np.all(np.diff(t2) >= 0)
    # tau2 = eta0 + (c2/c1) rho |u| h
    assert np.allclose(t2, etas + 0.5 * 0.1)
    _, _, t3 = compute_tau(0.1, 1.0, 1.0, 1.0, np.linspace(0.01, 1, 10), 0.01)
    assert np.all(np.diff(t3) <= 0)
    _, _, t3 = compute_tau(0.1, 1.0, 1.0, 1.0, 0.01, np.linspace(0, 3, 10))
    assert np.all(np.diff(t3) <= 0)


def test_tau_scales_like_h_squared():
    h = 1 / np.array([10, 20, 40, 80])
    t1, _, t3 = compute_tau(h, 1.0, 1.0, 1.0, 1.0, 0.01)
    for t in (t1, t3):
        slope = np.polyfit(np.log(h), np.log(t), 1)[0]
        assert abs(slope - 2) < 0.1


def test_subscale_toy_update():
    prev = SubscaleField(np.zeros((1, 1, 2)), np.zeros((1, 1)), np.zeros((1, 1)))
    R = ResidualSample(np.full((1, 1, 2), 2.0), np.full((1, 1), 2.0), np.full((1, 1), 2.0))
    tb1, t2, tb3 = compute_tau_bar(1.0, 1.0, 1.0, 1.0, 1.0)
    assert tb1 == 0.5
    new = advance_subscales(prev, R, np.array([tb1]), np.array([t2]), np.array([tb3]), 1.0, 1.0)
    assert np.allclose(new.u, 1.0) and np.allclose(new.c, 1.0) and np.allclose(new.p, 2.0)


def test_subscale_zero_residual_stays_zero():
    s = SubscaleField.zeros(3, 6)
    R = ResidualSample(np.zeros((3, 6, 2)), np.zeros((3, 6)), np.zeros((3, 6)))
    for _ in range(10):
        s = advance_subscales(s, R, np.ones(3), np.ones(3), np.ones(3), 1.0, 0.1)
    assert not np.any(s.u) and not np.any(s.p) and not np.any(s.c)


def test_subscale_decay_factor(rng):
    s = SubscaleField(rng.standard_normal((4, 6, 2)), np.zeros((4, 6)), rng.standard_normal((4, 6)))
    R = ResidualSample(np.zeros((4, 6, 2)), np.zeros((4, 6)), np.zeros((4, 6)))
    rho, dt = 1.0, 0.1
    tb1, _, tb3 = compute_tau_bar(np.full(4, 0.3), 1.0, np.full(4, 0.2), rho, dt)
    new = advance_subscales(s, R, tb1, np.ones(4), tb3, rho, dt)
    ratio = np.linalg.norm(new.u, axis=-1) / np.linalg.norm(s.u, axis=-1)
    assert np.allclose(ratio, rho * tb1[0] / dt) and np.all(ratio < 1)


def _zero_coeffs():
    return CoefficientSet(rho=1.0, alpha=0.0, viscosity=ViscosityModel("constant", eta=1.0))


def test_residual_zero_state(mesh4):
    z = FieldState.zeros(mesh4.n_nodes)
    r = strong_residual(mesh4, z, z.with_time(0.1), _zero_coeffs(), 0.1)
    assert not np.any(r.R1) and not np.any(r.R2) and not np.any(r.R3)
    one = strong_residual(mesh4, z, z.with_time(0.1), _zero_coeffs(), 0.1, k=3, q=2)
    assert one.R1.shape == (2,)


def test_residual_continuity_of_shear_flow(mesh4):
    z = FieldState.zeros(mesh4.n_nodes)
    new = FieldState(mesh4.nodes[:, 1].copy(), z.u2, z.p, z.c, 0.1)
    r = strong_residual(mesh4, z, new, _zero_coeffs(), 0.1)
    assert np.allclose(r.R2, 0, atol=1e-13)


def test_disabled_stabilisation_zeroes_tau(mesh4):
    z = FieldState.zeros(mesh4.n_nodes)
    ctx = build_step_context(mesh4, z, SubscaleField.zeros(mesh4.n_el, 6), _zero_coeffs(), 0.1, 0.1,
                             StabilizationSettings(enabled=False))
    assert not np.any(ctx.taub1) and not np.any(ctx.tau2) and not np.any(ctx.taub3)


def test_residual_of_exact_interpolant_is_consistent():
    """Up to the second-order terms a P1 field cannot see, the residual is O(h)."""
    case = make_case("weak_const", Re=100)
    coeffs = case.coefficients()
    f = case.field
    mu = case.viscosity.eta
    worst = []
    for n in (10, 20, 40):
        m = build_structured_mesh(n)
        dt = 0.1 / n
        t0, t1 = 0.5, 0.5 + dt

        def state(t):
            return FieldState(*(interpolate(m, f(k), t) for k in ("u1", "u2", "p", "c")), t=t)

        r = strong_residual(m, state(t0), state(t1), coeffs, dt)
        X = qp_coordinates(m)
        x, y = X[..., 0], X[..., 1]
        lap1 = f("u1_xx")(x, y, t1) + f("u1_yy")(x, y, t1)
        lap2 = f("u2_xx")(x, y, t1) + f("u2_yy")(x, y, t1)
        lapc = f("c_xx")(x, y, t1) + f("c_yy")(x, y, t1)
        e1 = np.abs(r.R1 + mu * np.stack([lap1, lap2], -1)).max()
        e3 = np.abs(r.R3 + 0.01 * lapc).max()
        worst.append(max(e1, e3, np.abs(r.R2).max()))
    rates = np.log2(np.array(worst[:-1]) / np.array(worst[1:]))
    assert np.all(rates > 0.8), (worst, rates)
