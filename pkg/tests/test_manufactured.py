import numpy as np
import pytest
import sympy as sym

from casson_asgs.manufactured import (C, D1_VAR, D2_VAR, P, SCENARIOS, U1, U2, X, Y, T, make_case,
                                      manufactured_forcing)
from oracles import forcing_discrepancy


def test_exact_velocity_divergence_free():
    assert sym.simplify(sym.diff(U1, X) + sym.diff(U2, Y)) == 0


def test_exact_pressure_zero_mean():
    assert sym.simplify(sym.integrate(P, (X, 0, 1), (Y, 0, 1))) == 0


@pytest.mark.parametrize("expr", [U1, U2, C, D1_VAR, D2_VAR])
def test_fields_vanish_on_boundary(expr):
    s = sym.Symbol("s")
    for sub in ({X: 0, Y: s}, {X: 1, Y: s}, {X: s, Y: 0}, {X: s, Y: 1}):
        assert sym.simplify(expr.subs(sub)) == 0


def test_transport_forcing_hand_value():
    case = make_case("weak_const", Re=100)
    _, fT = manufactured_forcing(case, np.array([0.5]), np.array([0.5]), 0.0)
    assert fT[0] == pytest.approx(-0.051875, abs=1e-14)


def test_zero_solution_has_zero_forcing():
    case = make_case("strong_exp_c", u1=0, u2=0, p=0, c=0)
    x = np.linspace(0, 1, 7)
    f1, f2, fT = case.forcing(x, x[::-1], 0.3)
    assert not np.any(f1) and not np.any(f2) and not np.any(fT)


@pytest.mark.parametrize("scenario", SCENARIOS)
def test_forcing_matches_high_precision_differences(scenario):
    assert forcing_discrepancy(make_case(scenario), times=(0.25,), n=7) < 1e-9


def test_yield_stress_forcing_matches_oracle():
    assert forcing_discrepancy(make_case("strong_linear_c", tau_y=0.2), times=(0.6,), n=7) < 1e-9


def test_registry_parameters():
    lin = make_case("strong_linear_c")
    assert (lin.viscosity.eta0_p, lin.viscosity.K) == (0.16, 0.25)
    ex = make_case("strong_exp_c")
    assert (ex.viscosity.A, ex.viscosity.B) == (0.129, 0.101)
    assert not ex.is_constant_diffusion()
    w = make_case("weak_const", Re=500)
    assert w.viscosity.eta == pytest.approx(1 / 500)
    assert w.is_constant_diffusion() and w.alpha == 0.01
    with pytest.raises(ValueError):
        make_case("unknown")
    with pytest.raises(ValueError):
        make_case("weak_const", Re=0)
    with pytest.raises(ValueError):
        make_case("weak_const", bogus=1)


def test_coefficients_use_exact_boundary_data():
    case = make_case("strong_exp_c")
    co = case.coefficients()
    x, y = np.array([0.3, 0.0]), np.array([0.0, 0.7])
    assert np.allclose(co.boundary_value("c", x, y, 0.4), 0.0)
    d1, d2, g1, g2 = co.diffusion(np.array([0.5]), np.array([0.3]), 0.0)
    assert d1[0] == pytest.approx(float(D1_VAR.subs({X: 0.5, Y: 0.3, T: 0})))
