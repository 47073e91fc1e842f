import numpy as np
import pytest

from grassflow import lie
from grassflow.calculus import Grid, ddx_plateau
from grassflow.development import develop, undevelop
from grassflow.flows import (DEFAULT_LAMBDAS, cross_check_geometric_flows, gauge_lift,
                             gnls_geometric, gnls_rhs, gradient_flow_check, kdv_rhs,
                             lambda_samples, lax_residual, mnls_rhs, mnls_soliton, parse_model,
                             rhs, simulate, stability_bound)
from grassflow.kdv import traveling_wave
from grassflow.lie import OrbitParams, ParameterError

from conftest import gaussian_u


def rel(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


@pytest.fixture(scope="module")
def sol_gamma(grid, p21, soliton):
    return undevelop(soliton, grid, p21).gamma


def test_parse_model():
    assert parse_model("mnls") == ("mnls", None)
    assert parse_model("flow-3") == ("flow", 3)
    assert parse_model("hflow", 1) == ("hflow", 1)
    for bad in ("nls", "flow", "flow-0", "hflow-x"):
        with pytest.raises(ParameterError):
            parse_model(bad)


def test_state_mismatch(grid, p21, soliton):
    with pytest.raises(ParameterError):
        rhs("kdv", soliton, grid, p21)
    with pytest.raises(ParameterError):
        rhs("mnls", np.zeros(grid.N), grid, p21)


def test_mnls_rhs_interior(grid, p21, soliton):
    err = np.abs(mnls_rhs(soliton, grid, p21) - lie.offblock(1j / np.cosh(grid.x), p21))
    assert err[np.abs(grid.x) < 15].max() < 1e-9


@pytest.mark.xfail(strict=True, reason="sech(20) ~ 4e-9 leaves a kink at the periodic seam; second derivative error there is ~7e-8")
def test_mnls_rhs_sech_full_grid(grid, p21, soliton):
    err = np.abs(mnls_rhs(soliton, grid, p21) - lie.offblock(1j / np.cosh(grid.x), p21))
    assert err.max() < 1e-9


def test_flow2_equals_mnls(grid, p31):
    u = gaussian_u(grid, p31, 2)
    np.testing.assert_allclose(rhs("flow-2", u, grid, p31), mnls_rhs(u, grid, p31), atol=1e-9)


def test_gnls_fixed_point_and_geometric(grid, p21, sol_gamma):
    a = np.broadcast_to(p21.a, (grid.N, 2, 2)).copy()
    assert not gnls_rhs(a, grid).any()
    assert np.abs(gnls_rhs(sol_gamma, grid) - gnls_geometric(sol_gamma, grid)).max() < 1e-8


@pytest.mark.parametrize("nk", [(2, 1), (3, 1), (4, 2)])
@pytest.mark.parametrize("N,seed", [(256, 42), (512, 3)])
def test_lambda1_identity(nk, N, seed):
    g, p = Grid(20.0, N), OrbitParams(*nk)
    gamma = undevelop(gaussian_u(g, p, seed), g, p).gamma
    gx = ddx_plateau(gamma, g)
    assert np.abs(gx + lie.ad(gamma, lie.ad(gamma, gx))).max() < 1e-10


def test_hflow0_is_gnls(grid, p21, sol_gamma):
    assert rel(rhs("hflow-0", sol_gamma, grid, p21), gnls_rhs(sol_gamma, grid)) < 1e-6
    assert gradient_flow_check(develop(sol_gamma, grid, p21), 1) < 1e-6


def test_stability_bound_enforced(grid, p21, soliton):
    assert stability_bound(2, grid.h) == pytest.approx(0.2 * grid.h**2)
    with pytest.raises(ValueError, match="stability"):
        simulate("mnls", soliton, grid, p21, 0.1, 0.05)
    with pytest.raises(ValueError):
        simulate("mnls", soliton, grid, p21, 0.001, 3e-4)


def test_nan_aborts(grid, p21, soliton):
    bad = soliton.copy()
    bad[10, 0, 1] = np.nan
    with pytest.raises(FloatingPointError):
        simulate("mnls", bad, grid, p21, 2e-4, 2e-4, track_conserved=False)


@pytest.mark.parametrize("model", ["mnls", "flow-3", "gnls", "hflow-1", "kdv"])
def test_vacuum_trajectory_constant(grid, p21, model):
    if model == "kdv":
        s0 = np.zeros(grid.N)
    elif model in ("gnls", "hflow-1"):
        s0 = np.broadcast_to(p21.a, (grid.N, 2, 2)).copy()
    else:
        s0 = np.zeros((grid.N, 2, 2), dtype=complex)
    dt = 1e-4 if model in ("kdv", "flow-3", "hflow-1") else 2e-4
    tr = simulate(model, s0, grid, p21 if model != "kdv" else None, 10 * dt, dt, log_every=5)
    assert all(np.array_equal(s, s0) for s in tr.states)


def test_mnls_soliton_exact(grid, p21):
    tr = simulate("mnls", mnls_soliton(grid, p21), grid, p21, 1.0, 2e-4, log_every=500)
    err = max(np.abs(s - mnls_soliton(grid, p21, t)).max() for t, s in zip(tr.times, tr.states))
    assert err < 1e-4
    assert all(d < 1e-6 for d in tr.drift().values())


def test_gnls_conservation_and_orbit(grid, p21, sol_gamma):
    tr = simulate("gnls", sol_gamma, grid, p21, 0.5, 2e-4, log_every=500)
    d = tr.drift()
    assert d["H_0"] < 1e-5 and d["H_1"] < 1e-5
    assert tr.orbit_before.max() < 1e-6
    assert not tr.flags


def test_lax_vacuum(grid, p21):
    zero = np.zeros((grid.N, 2, 2), dtype=complex)
    a = np.broadcast_to(p21.a, zero.shape).copy()
    assert max(lax_residual("mnls", zero, zero, grid, p21)) < 1e-15
    assert max(lax_residual("gnls", a, zero, grid, p21)) < 1e-15
    assert max(lax_residual("kdv", np.zeros(grid.N), np.zeros(grid.N), grid)) < 1e-15


def test_lax_residuals_and_controls(grid, p21, sol_gamma):
    lams = lambda_samples(5)
    assert lams[:3] == DEFAULT_LAMBDAS and 0.25 <= lams[3] <= 2.5
    u = mnls_soliton(grid, p21)
    du = mnls_rhs(u, grid, p21)
    assert max(lax_residual("mnls", u, du, grid, p21, lams)) < 1e-7
    assert min(lax_residual("mnls", u, 1.01 * du, grid, p21, lams)) > 1e-3
    assert max(lax_residual("mnls", u, mnls_rhs(u, grid, p21, -1.0), grid, p21, lams)) > 1e-3
    dg = gnls_rhs(sol_gamma, grid)
    assert max(lax_residual("gnls", sol_gamma, dg, grid, p21, lams)) < 1e-6
    assert min(lax_residual("gnls", sol_gamma, 1.01 * dg, grid, p21, lams)) > 1e-3
    q = traveling_wave(grid, 1.0)
    assert max(lax_residual("kdv", q, kdv_rhs(q, grid), grid, None, lams)) < 1e-6


def test_lax_generic_gnls_state(grid, p31):
    gamma = undevelop(gaussian_u(grid, p31, 8), grid, p31).gamma
    assert max(lax_residual("gnls", gamma, gnls_rhs(gamma, grid), grid, p31)) < 1e-6


def test_gauge_lift_vacuum(grid, p21):
    zero = np.zeros((grid.N, 2, 2), dtype=complex)
    tr = simulate("mnls", zero, grid, p21, 2e-3, 2e-4, log_every=2)
    lift = gauge_lift(tr, grid, p21)
    assert np.abs(lift.trajectory.states - p21.a).max() < 1e-15


def test_gauge_lift_soliton(grid, p21):
    u0 = mnls_soliton(grid, p21)
    tm = simulate("mnls", u0, grid, p21, 0.1, 2e-4, log_every=10, track_conserved=False)
    lift = gauge_lift(tm, grid, p21)
    assert lift.ok
    T, S = lift.trajectory.times, lift.trajectory.states
    res = max(np.abs((S[i + 1] - S[i - 1]) / (T[i + 1] - T[i - 1]) - gnls_rhs(S[i], grid)).max()
              for i in range(1, len(T) - 1))
    assert res < 1e-4
    for G, U in zip(S[::10], tm.states[::10]):
        assert np.abs(develop(G, grid, p21).u - U).max() < 1e-6


def test_geometric_cross_check_vacuum(grid, p21):
    fp = develop(np.broadcast_to(p21.a, (grid.N, 2, 2)).copy(), grid, p21)
    rep = cross_check_geometric_flows(fp)
    assert rep.j0 == rep.j1 == rep.j2_reference == 0


def test_geometric_j0(grid, p21, sol_gamma):
    rep = cross_check_geometric_flows(develop(sol_gamma, grid, p21))
    assert rep.j0 < 1e-7 and rep.j0_vs_hierarchy < 1e-6


@pytest.mark.xfail(strict=True, reason="g[Q_3,a]g^-1 equals -nabla^2 gamma_x + 2 gamma_x^3; the reference form has +nabla^2")
def test_geometric_j1_reference(grid, p21, sol_gamma):
    assert cross_check_geometric_flows(develop(sol_gamma, grid, p21)).j1 < 1e-6


@pytest.mark.parametrize("nk", [(2, 1), (3, 1), (4, 2)])
def test_geometric_j1_fitted_sign(grid, nk):
    from grassflow.calculus import ddx

    p = OrbitParams(*nk)
    fp = undevelop(gaussian_u(grid, p, 4), grid, p)
    gamma = fp.gamma
    gx = ddx_plateau(gamma, grid)
    n1 = lie.tangent_projection(gamma, ddx(gx, grid))
    n2 = lie.tangent_projection(gamma, ddx(n1, grid))
    from grassflow.hierarchy import compute_hierarchy

    T = compute_hierarchy(fp.u, grid, p, 4)
    target = fp.frame_conj(lie.ad(T.Q[3], p.a))
    assert rel(-n2 + 2 * gx @ gx @ gx, target) < 1e-6


def test_kdv_wave_translates():
    g = Grid(20.0, 256)
    tr = simulate("kdv", traveling_wave(g, 1.0), g, None, 1.0, 1e-4, log_every=2000)
    dev = max(np.abs(s - traveling_wave(g, 1.0, t)).max() for t, s in zip(tr.times, tr.states))
    assert dev < 1e-3
    assert max(tr.drift().values()) < 1e-6
