import numpy as np
import pytest
from scipy.linalg import expm
from scipy.special import erf

from grassflow import lie
from grassflow.calculus import Grid, ddx, ddx_plateau, integrate
from grassflow.development import (covariant_chain, d_phi, develop, grad_H, perturb_path,
                                   tangent_defect, transport, undevelop)
from grassflow.flows import gnls_rhs
from grassflow.lie import DomainError, OrbitParams

from conftest import bump_xi, gaussian_u

SIZES = [(2, 1), (3, 1), (4, 2)]


def rel(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


@pytest.mark.parametrize("nk", SIZES)
def test_vacuum(grid, nk):
    p = OrbitParams(*nk)
    fp = undevelop(np.zeros((grid.N, p.n, p.n), dtype=complex), grid, p)
    np.testing.assert_allclose(fp.g, np.broadcast_to(np.eye(p.n), fp.g.shape), atol=1e-15)
    np.testing.assert_allclose(fp.gamma, np.broadcast_to(p.a, fp.gamma.shape), atol=1e-15)
    back = develop(np.broadcast_to(p.a, fp.gamma.shape).copy(), grid, p)
    assert np.abs(back.u).max() < 1e-15
    H, G = grad_H(back, 1)
    assert H == 0 and not G.any()
    assert all(not c.any() for c in covariant_chain(back, 3).chain)


def test_constant_direction_exponential(grid, p21):
    theta = np.exp(-grid.x**2)
    X = lie.offblock(np.array([[1.0]]), p21)
    u = ddx(theta, grid)[:, None, None] * X
    fp = undevelop(u, grid, p21)
    g_exact = np.stack([expm(t * X) for t in theta])
    np.testing.assert_allclose(fp.g, g_exact, atol=1e-9)
    np.testing.assert_allclose(fp.gamma, g_exact @ p21.a @ lie.dagger(g_exact), atol=1e-9)


@pytest.mark.parametrize("nk", SIZES)
def test_frame_invariants(grid, nk):
    p = OrbitParams(*nk)
    u = gaussian_u(grid, p, 5)
    fp = undevelop(u, grid, p)
    assert fp.ok
    np.testing.assert_allclose(fp.g[0], np.eye(p.n), atol=1e-10)
    np.testing.assert_allclose(fp.gamma, fp.g @ p.a @ lie.dagger(fp.g), atol=1e-8)
    assert lie.orbit_residual(fp.gamma, p).max() < 1e-9
    # g^-1 g_x = u
    gx = ddx_plateau(fp.g, grid)
    np.testing.assert_allclose(lie.dagger(fp.g) @ gx, u, atol=1e-6)


def test_soliton_orbit(grid, p21, soliton):
    assert lie.orbit_residual(undevelop(soliton, grid, p21).gamma, p21).max() < 1e-9


@pytest.mark.parametrize("nk", SIZES)
def test_roundtrips(grid, nk):
    p = OrbitParams(*nk)
    for seed in range(3):
        u = gaussian_u(grid, p, 100 + seed)
        fp = undevelop(u, grid, p)
        dv = develop(fp.gamma, grid, p)
        assert np.abs(dv.u - u).max() < 1e-8
        assert np.abs(lie.par(dv.u, p)).max() < 1e-10
        assert np.abs(undevelop(dv.u, grid, p).gamma - fp.gamma).max() < 1e-8
        np.testing.assert_allclose(dv.gamma, dv.g @ p.a @ lie.dagger(dv.g), atol=1e-7)


def test_mixed_frame_stripped(grid, p31):
    u = gaussian_u(grid, p31, 9)
    fp = undevelop(u, grid, p31)
    par = lie.par(lie.random_skew(3, np.random.default_rng(1)), p31)
    h = lie.expm_skew(np.exp(-grid.x**2 / 4)[:, None, None] * par[None])
    f = fp.g @ h
    dv = develop(f @ p31.a @ lie.dagger(f), grid, p31)
    assert np.abs(dv.u - u).max() < 1e-8


def test_develop_rejects_unbased_path(grid, p21):
    rng = np.random.default_rng(0)
    g0 = lie.random_unitary(2, rng)
    gamma = np.broadcast_to(g0 @ p21.a @ g0.conj().T, (grid.N, 2, 2)).copy()
    with pytest.raises(DomainError, match="left boundary base point"):
        develop(gamma, grid, p21)


def test_transport_right_and_left(grid):
    rng = np.random.default_rng(2)
    X = lie.random_skew(3, rng)
    w = np.exp(-grid.x**2)
    A = w[:, None, None] * X[None]
    W = np.sqrt(np.pi) / 2 * (erf(grid.x) - erf(grid.x[0]))
    exact = np.stack([expm(s * X) for s in W])
    for side in ("right", "left"):
        g = transport(A, grid, side)
        g = g[0] if isinstance(g, tuple) else g
        assert np.abs(g - exact).max() < 1e-6


def test_d_phi_zero_and_domain(grid, p21, soliton):
    fp = undevelop(soliton, grid, p21)
    assert not d_phi(fp, np.zeros_like(fp.gamma)).any()
    with pytest.raises(DomainError):
        d_phi(fp, fp.frame_conj(np.broadcast_to(p21.a, fp.gamma.shape)))


@pytest.mark.parametrize("nk", SIZES)
def test_d_phi_finite_difference(grid, nk):
    p = OrbitParams(*nk)
    fp = undevelop(gaussian_u(grid, p, 8), grid, p)
    rng = np.random.default_rng(sum(nk))
    for _ in range(4):
        xi = bump_xi(grid, p, rng)
        e = 1e-5
        fd = (develop(perturb_path(fp.gamma, xi, e), grid, p).u
              - develop(perturb_path(fp.gamma, xi, -e), grid, p).u) / (2 * e)
        assert rel(fd, d_phi(fp, lie.ad(xi, fp.gamma))) < 1e-5


def test_perturb_path_stays_on_orbit(grid, p31):
    fp = undevelop(gaussian_u(grid, p31, 4), grid, p31)
    xi = bump_xi(grid, p31, np.random.default_rng(3))
    assert lie.orbit_residual(perturb_path(fp.gamma, xi, 0.3), p31).max() < 1e-13
    assert tangent_defect(fp.gamma, lie.ad(xi, fp.gamma)) < 1e-13


@pytest.mark.parametrize("nk", SIZES)
def test_H0_energy(grid, nk):
    p = OrbitParams(*nk)
    fp = undevelop(gaussian_u(grid, p, 21), grid, p)
    H0, G = grad_H(fp, 0)
    gx = ddx_plateau(fp.gamma, grid)
    assert abs(H0 - 0.5 * integrate(lie.inner(gx, gx), grid)) < 1e-7 * H0
    assert tangent_defect(fp.gamma, G) < 1e-10


@pytest.mark.parametrize("j", [0, 1])
def test_grad_H_finite_difference(grid, p31, j):
    fp = undevelop(gaussian_u(grid, p31, 31), grid, p31)
    _, G = grad_H(fp, j)
    rng = np.random.default_rng(10 + j)
    for _ in range(3):
        xi = bump_xi(grid, p31, rng)
        e = 1e-4
        fd = (grad_H(develop(perturb_path(fp.gamma, xi, e), grid, p31), j)[0]
              - grad_H(develop(perturb_path(fp.gamma, xi, -e), grid, p31), j)[0]) / (2 * e)
        an = integrate(lie.inner(G, lie.ad(xi, fp.gamma)), grid)
        assert abs(fd - an) < 1e-5 * abs(an)


def test_grad_H0_generates_gnls(grid, p21, soliton):
    fp = undevelop(soliton, grid, p21)
    _, G = grad_H(fp, 0)
    assert rel(lie.ad(G, fp.gamma), gnls_rhs(fp.gamma, grid)) < 1e-6


def test_covariant_chain_low_orders(grid, p21, soliton):
    fp = undevelop(soliton, grid, p21)
    ch = covariant_chain(fp, 2)
    np.testing.assert_allclose(ch.chain[0], ddx_plateau(fp.gamma, grid), atol=0)
    assert ch.residuals[0] < 1e-8
    assert ch.residuals[1] < 1e-7


def test_refinement_convergence(p21):
    # pointwise convergence of Psi under grid refinement at shared nodes
    out = []
    for N in (128, 256, 512):
        g = Grid(20.0, N)
        q = np.exp(-g.x**2) * (1 + 0.5j)
        fp = undevelop(lie.offblock(q, p21), g, p21)
        out.append(fp.gamma[:: N // 128])
    assert np.abs(out[2] - out[1]).max() < 1e-8
