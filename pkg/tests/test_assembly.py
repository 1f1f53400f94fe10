import numpy as np
import pytest

from casson_asgs import kernels
from casson_asgs.assembly import (VAR_INDEX, apply_dirichlet, assemble_step, convection_block,
                                  coupled_pattern, dirichlet_constraints, dof)
from casson_asgs.coefficients import CoefficientSet, lid_velocity
from casson_asgs.fe import FieldState, interpolate
from casson_asgs.manufactured import make_case
from casson_asgs.mesh import build_structured_mesh
from casson_asgs.rheology import ViscosityModel
from casson_asgs.solver import solve_linear
from casson_asgs.stabilization import StabilizationSettings, SubscaleField, build_step_context

BACKENDS = ["numpy"] + (["numba"] if kernels.HAVE_NUMBA else [])


def _manufactured_step(n=6, t=0.4, dt=0.1):
    case = make_case("strong_exp_c", tau_y=0.05)
    mesh = build_structured_mesh(n)
    f = case.exact_state_fields()
    st = FieldState(*(interpolate(mesh, f[k], t) for k in ("u1", "u2", "p", "c")), t=t)
    rng = np.random.default_rng(3)
    subs = SubscaleField(rng.standard_normal((mesh.n_el, 6, 2)) * 1e-3, np.zeros((mesh.n_el, 6)),
                         rng.standard_normal((mesh.n_el, 6)) * 1e-3)
    return mesh, st, subs, case.coefficients(), dt


def _stokes_coeffs():
    return CoefficientSet(rho=1.0, alpha=0.0, viscosity=ViscosityModel("constant", eta=1.0))


def test_dof_numbering():
    assert dof(3, "c") == 15 and dof(0, "p") == 2
    assert list(VAR_INDEX) == ["u1", "u2", "p", "c"]


def test_stokes_zero_data_gives_zero_solution():
    mesh = build_structured_mesh(4)
    z = FieldState.zeros(mesh.n_nodes)
    sys_, _ = assemble_step(mesh, z, SubscaleField.zeros(mesh.n_el, 6), _stokes_coeffs(), 0.1, 0.1)
    assert not np.any(sys_.rhs)
    sys_ = apply_dirichlet(sys_, dirichlet_constraints(mesh, _stokes_coeffs(), 0.1))
    x = solve_linear(sys_.matrix, sys_.rhs)
    assert not np.any(x)


def test_dirichlet_rows_are_unit():
    mesh, st, subs, co, dt = _manufactured_step()
    sys_, _ = assemble_step(mesh, st, subs, co, dt, st.t + dt)
    cons = dirichlet_constraints(mesh, co, st.t + dt)
    out = apply_dirichlet(sys_, cons)
    A = out.matrix.tocsr()
    for d in list(cons)[:20] + [int(dof(0, "p"))]:
        row = A.getrow(d).toarray().ravel()
        assert row[d] == 1.0 and np.count_nonzero(row) == 1
        col = A.getcol(d).toarray().ravel()
        assert np.count_nonzero(col) == 1
    assert np.allclose(out.rhs[list(cons)], 0.0)
    assert A.nnz == sys_.matrix.nnz  # pattern kept


def test_pin_conflict_rejected():
    mesh, st, subs, co, dt = _manufactured_step(n=2)
    sys_, _ = assemble_step(mesh, st, subs, co, dt, st.t + dt)
    with pytest.raises(ValueError):
        apply_dirichlet(sys_, {int(dof(0, "p")): 1.0})


def test_lid_corners_take_lid_value():
    mesh = build_structured_mesh(4)
    co = CoefficientSet(dirichlet={"u1": lid_velocity})
    cons = dirichlet_constraints(mesh, co, 0.0)
    top = mesh.boundary["top"]
    assert all(cons[int(dof(i, "u1"))] == 1.0 for i in top)
    others = set(mesh.boundary_nodes.tolist()) - set(top.tolist())
    assert all(cons[int(dof(i, "u1"))] == 0.0 for i in others)


def test_pattern_symmetric_and_reused():
    mesh, st, subs, co, dt = _manufactured_step()
    a, _ = assemble_step(mesh, st, subs, co, dt, st.t + dt)
    b, _ = assemble_step(mesh, st.with_time(st.t + dt), subs, co, dt, st.t + 2 * dt)
    assert np.array_equal(a.matrix.indices, b.matrix.indices)
    assert np.array_equal(a.matrix.indptr, b.matrix.indptr)
    S = (a.matrix != 0).astype(int) + (a.matrix.T != 0).astype(int)
    P = coupled_pattern(mesh)
    pat = np.zeros((P.n, P.n), dtype=bool)
    pat[P.row_of, P.indices] = True
    assert np.array_equal(pat, pat.T)
    assert S.shape == a.matrix.shape


def test_assembly_bitwise_reproducible():
    mesh, st, subs, co, dt = _manufactured_step()
    a, _ = assemble_step(mesh, st, subs, co, dt, st.t + dt)
    b, _ = assemble_step(mesh, st, subs, co, dt, st.t + dt)
    assert a.matrix.data.tobytes() == b.matrix.data.tobytes()
    assert a.rhs.tobytes() == b.rhs.tobytes()


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba unavailable")
def test_backends_agree():
    mesh, st, subs, co, dt = _manufactured_step()
    ctx = build_step_context(mesh, st, subs, co, dt, st.t + dt, StabilizationSettings())
    K1, F1 = kernels.local_system(ctx, "numpy")
    K2, F2 = kernels.local_system(ctx, "numba")
    assert np.allclose(K1, K2, rtol=1e-12, atol=1e-14)
    assert np.allclose(F1, F2, rtol=1e-12, atol=1e-14)


def test_backend_env_flag(monkeypatch):
    monkeypatch.setenv(kernels.ENV_FLAG, "numpy")
    assert kernels.default_backend() == "numpy"
    monkeypatch.setenv(kernels.ENV_FLAG, "fortran")
    with pytest.raises(ValueError):
        kernels.default_backend()


@pytest.mark.parametrize("backend", BACKENDS)
def test_convection_skew_symmetric(backend, rng):
    mesh = build_structured_mesh(8)
    # convecting field with nonzero divergence so the skew term matters
    u = FieldState(interpolate(mesh, lambda x, y, t: np.sin(3 * x) * y), interpolate(mesh, lambda x, y, t: x * y**2),
                   np.zeros(mesh.n_nodes), np.zeros(mesh.n_nodes))
    C = convection_block(mesh, u, 1.3, backend=backend)
    interior = ~mesh.boundary_mask()
    for _ in range(3):
        v = rng.standard_normal(mesh.n_nodes) * interior
        assert abs(v @ (C @ v)) <= 1e-12 * (v @ v)


def _block(A, rvar, cvar, n):
    r = dof(np.arange(n), rvar)
    c = dof(np.arange(n), cvar)
    return A[r][:, c].toarray()


def test_unstabilised_system_is_plain_galerkin():
    mesh = build_structured_mesh(2)
    z = FieldState.zeros(mesh.n_nodes)
    co = CoefficientSet(rho=1.0, alpha=0.01, viscosity=ViscosityModel("constant", eta=0.5))
    subs = SubscaleField.zeros(mesh.n_el, 6)
    off, _ = assemble_step(mesh, z, subs, co, 0.1, 0.1, StabilizationSettings(enabled=False))
    on, _ = assemble_step(mesh, z, subs, co, 0.1, 0.1, StabilizationSettings())
    n = mesh.n_nodes
    A = off.matrix.tocsr()
    assert not np.any(_block(A, "p", "p", n))
    for v in ("u1", "u2"):
        assert np.allclose(_block(A, v, "p", n), -_block(A, "p", v, n).T, atol=1e-14)
    # stabilisation adds a pressure Laplacian and changes nothing in the viscous-mass block structure
    pp = _block(on.matrix.tocsr(), "p", "p", n)
    assert np.all(np.linalg.eigvalsh(0.5 * (pp + pp.T)) > -1e-14) and np.any(pp)
    diff = (on.matrix - off.matrix).toarray()
    coupling_uc = _block(on.matrix.tocsr(), "u1", "c", n)
    assert not np.any(coupling_uc)
    assert np.abs(diff).max() > 0


def test_galerkin_mass_block_value():
    mesh = build_structured_mesh(1)
    z = FieldState.zeros(mesh.n_nodes)
    co = CoefficientSet(rho=2.0, alpha=0.0, viscosity=ViscosityModel("constant", eta=1e-30))
    sys_, _ = assemble_step(mesh, z, SubscaleField.zeros(mesh.n_el, 6), co, 0.5, 0.5,
                            StabilizationSettings(enabled=False))
    M = _block(sys_.matrix.tocsr(), "u1", "u1", mesh.n_nodes)
    # consistent mass of two right triangles of area 1/2, scaled by rho/dt = 4
    assert M.sum() == pytest.approx(4.0, rel=1e-12)
    assert M[0, 0] == pytest.approx(4.0 * 2 * (0.5 / 6), rel=1e-9)
