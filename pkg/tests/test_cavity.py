import numpy as np
import pytest

from casson_asgs.cavity import (centerline_flux, centerline_profiles, compute_streamfunction,
                                evaluate_p1, mass_matrix, stiffness_matrix, write_profile_csv,
                                write_streamfunction_csv)
from casson_asgs.fe import FieldState, interpolate
from casson_asgs.mesh import build_structured_mesh
from casson_asgs.solver import run_steady_cavity


@pytest.fixture(scope="module")
def cavity32():
    mesh = build_structured_mesh(32)
    return mesh, run_steady_cavity(mesh, 100.0)


def test_zero_velocity_zero_streamfunction(mesh4):
    z = np.zeros(mesh4.n_nodes)
    sf = compute_streamfunction(mesh4, (z, z))
    assert not np.any(sf.psi)


def test_rigid_rotation_extremum_at_centre():
    mesh = build_structured_mesh(16)
    u1 = interpolate(mesh, lambda x, y, t: -(y - 0.5))
    u2 = interpolate(mesh, lambda x, y, t: x - 0.5)
    sf = compute_streamfunction(mesh, (u1, u2))
    assert np.allclose(sf.vorticity, 2.0)
    assert np.linalg.norm(sf.centre - 0.5) <= mesh.h
    assert sf.extremum > 0
    assert np.all(sf.psi[mesh.boundary_nodes] == 0.0)


def test_weak_poisson_equation_holds(cavity32):
    mesh, res = cavity32
    sf = compute_streamfunction(mesh, res.state)
    r = stiffness_matrix(mesh) @ sf.psi - mass_matrix(mesh) @ sf.vorticity
    interior = ~mesh.boundary_mask()
    assert np.abs(r[interior]).max() < 1e-12


def test_re100_single_vortex_upper_half(cavity32):
    mesh, res = cavity32
    assert res.converged
    sf = compute_streamfunction(mesh, res.state)
    assert sf.extremum < 0 and abs(sf.psi.max()) < 0.1 * abs(sf.extremum)
    x, y = sf.centre
    assert 0 < x < 1 and 0.5 < y < 1


def test_profiles(cavity32, mesh4):
    mesh, res = cavity32
    (ys, u1), (xs, u2) = centerline_profiles(mesh, res.state)
    assert u1[-1] == 1.0 and u1[0] == 0.0
    assert np.all(np.isfinite(u1)) and np.all(np.isfinite(u2))
    vmax = np.abs(np.concatenate([res.state.u1, res.state.u2])).max()
    assert np.abs(u1).max() <= vmax + 1e-14 and np.abs(u2).max() <= vmax + 1e-14
    z = FieldState.zeros(mesh4.n_nodes)
    (_, a), (_, b) = centerline_profiles(mesh4, z)
    assert not np.any(a) and not np.any(b)


def test_evaluate_p1_reproduces_linears():
    mesh = build_structured_mesh(5)
    f = interpolate(mesh, lambda x, y, t: 1 + 2 * x - 3 * y)
    pts = np.random.default_rng(1).uniform(0, 1, (50, 2))
    assert np.allclose(evaluate_p1(mesh, f, pts), 1 + 2 * pts[:, 0] - 3 * pts[:, 1])
    with pytest.raises(ValueError):
        evaluate_p1(mesh, f, [[1.5, 0.2]])


def test_centerline_mass_flux_balances_under_refinement():
    """Net flux through x = 0.5 tends to zero at first order (weak incompressibility)."""
    nets = []
    for n in (16, 32):
        mesh = build_structured_mesh(n)
        res = run_steady_cavity(mesh, 100.0)
        fwd, back = centerline_flux(mesh, res.state)
        assert fwd > 0 > back
        nets.append(abs(fwd + back))
    assert nets[0] / nets[1] > 1.7


def test_csv_writers(tmp_path, cavity32):
    mesh, res = cavity32
    sf = compute_streamfunction(mesh, res.state)
    p = write_streamfunction_csv(tmp_path / "psi.csv", sf)
    lines = p.read_text().splitlines()
    assert lines[0] == "x,y,psi" and len(lines) == mesh.n_nodes + 1
    q = write_profile_csv(tmp_path / "u.csv", "y", "u1", [0, 1], [0.0, 1.0])
    assert q.read_text().splitlines()[0] == "y,u1"
