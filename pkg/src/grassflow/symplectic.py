"""Poisson operators T_u, P_u, L_gamma and the symplectic-form hierarchy."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import lie
from .calculus import Grid, cumint, ddx, ddx_plateau, integrate
from .lie import DomainError, OrbitParams

CHAR_TOL = 1e-9


def t_u(u, v, grid: Grid, p: OrbitParams) -> np.ndarray:
    return cumint(lie.par(lie.ad(u, v), p), grid)


class PuResult(NamedTuple):
    value: np.ndarray
    vtilde: np.ndarray
    residual: float


def p_u(u, v, grid: Grid, p: OrbitParams) -> PuResult:
    """``P_u(v) = v_x + pi_perp[u, v] - [u, T_u v]``.

    The residual compares with the factorized form ``(d_x + ad u)(v - T_u v)``.
    Trailing batch axes after the matrix axes are not supported; use a
    leading batch via the grid axis only.
    """
    T = t_u(u, v, grid, p)
    val = ddx(v, grid) + lie.perp(lie.ad(u, v), p) - lie.ad(u, T)
    vt = v - T
    alt = ddx_plateau(vt, grid) + lie.ad(u, vt)
    res = float(np.max(np.abs(val - alt), initial=0.0))
    return PuResult(val, vt, res)


def l_gamma(fp, eta, tol: float = 1e-8):
    """``L_gamma(eta) = g P_u(g^-1 eta g) g^-1`` with its geometric cross-check.

    Returns the value and ``max |L_gamma(eta) - (eta + zeta)_x|`` where
    ``zeta = -g T_u(v) g^-1`` is the normal correction.
    """
    v = fp.frame_unconj(np.asarray(eta, dtype=complex))
    scale = max(1.0, float(np.max(np.abs(v), initial=0.0)))
    leak = float(np.max(np.abs(lie.par(v, fp.params)), initial=0.0))
    if leak > tol * scale:
        raise DomainError(f"argument is not tangent: frame-conjugated par part {leak:.3e}")
    v = lie.perp(v, fp.params)
    res = p_u(fp.u, v, fp.grid, fp.params)
    val = fp.frame_conj(res.value)
    zeta = -fp.frame_conj(t_u(fp.u, v, fp.grid, fp.params))
    geo = ddx_plateau(eta + zeta, fp.grid)
    return val, float(np.max(np.abs(val - geo), initial=0.0))


def _tr_pair(x, y, grid: Grid) -> float:
    return float(np.real(integrate(lie.trace(x @ y), grid)))


def w_k(u, v1, v2, k: int, grid: Grid, p: OrbitParams) -> float:
    """Order-k form on fields, ``k <= 0``."""
    if k > 0:
        raise ValueError("w_k is implemented for k <= 0; use w_1 for k = 1")
    z = lie.ad_a_inv(v1, p)
    for _ in range(-k):
        z = lie.ad_a_inv(lie.perp(p_u(u, z, grid, p).value, p), p)
    return (-1) ** (-k + 1) * _tr_pair(z, v2, grid)


def _ad_gamma_inv(gamma, w):
    # ad(gamma)^2 = -id on tangents
    return -lie.ad(gamma, w)


def tau_k(fp, d1, d2, k: int, tol: float = 1e-8) -> float:
    """Order-k form on paths, ``k <= 0``."""
    if k > 0:
        raise ValueError("tau_k is implemented for k <= 0")
    from .development import tangent_defect

    for d in (d1, d2):
        scale = max(1.0, float(np.max(np.abs(d), initial=0.0)))
        if tangent_defect(fp.gamma, d) > tol * scale:
            raise DomainError("tau_k needs tangent fields along the path")
    z = _ad_gamma_inv(fp.gamma, d1)
    for _ in range(-k):
        z = _ad_gamma_inv(fp.gamma, l_gamma(fp, z)[0])
    return (-1) ** (-k + 1) * _tr_pair(z, d2, fp.grid)


class W1Result(NamedTuple):
    value: float
    z: np.ndarray
    residual: float
    ok: bool


def _perp_basis(p: OrbitParams) -> np.ndarray:
    """Real basis of the off-block subspace, shape ``(perp_dim, n, n)``."""
    out = []
    for i in range(p.k):
        for j in range(p.n - p.k):
            for c in (1.0, 1j):
                q = np.zeros((p.k, p.n - p.k), dtype=complex)
                q[i, j] = c
                out.append(lie.offblock(q, p))
    return np.array(out)


def _perp_coords(v, basis) -> np.ndarray:
    # basis is orthogonal with <b, b> = 2
    return np.einsum("...ij,bji->...b", v, basis).real * -0.5


def w_1(u, v1, v2, grid: Grid, p: OrbitParams, tol: float = 1e-6) -> W1Result:
    """Order-1 form ``int tr(P_u^-1(v1) v2)`` via a dense collocation solve.

    ``P_u z = v1`` is assembled column by column from the real basis of
    off-block fields on the grid, with ``z(x_0) = 0`` and a zero Nyquist coefficient appended. No
    regularization is used: if ``v1`` is outside the image the residual
    exceeds ``tol`` and ``ok`` is False.
    """
    basis = _perp_basis(p)
    d = len(basis)
    N = grid.N
    # columns: unit field at point m in basis direction b; batch axis 1
    cols = np.zeros((N, N * d, p.n, p.n), dtype=complex)
    for b in range(d):
        cols[np.arange(N), np.arange(N) * d + b] = basis[b]
    out = p_u(u[:, None], cols, grid, p).value
    M = _perp_coords(out, basis).transpose(0, 2, 1).reshape(N * d, N * d)
    anchor = np.zeros((d, N * d))
    anchor[np.arange(d), np.arange(d)] = 1.0
    # the spectral derivative ignores the Nyquist mode, so pin it to zero
    nyq = np.kron((-1.0) ** np.arange(N), np.eye(d))
    A = np.vstack([M, anchor, nyq])
    rhs = np.concatenate([_perp_coords(v1, basis).reshape(-1), np.zeros(2 * d)])
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    z = np.einsum("mb,bij->mij", sol.reshape(N, d), basis)
    resid = float(np.max(np.abs(p_u(u, z, grid, p).value - v1)))
    return W1Result(_tr_pair(z, v2, grid), z, resid, resid < tol)


class PullbackResult(NamedTuple):
    lhs: float
    rhs: float
    residual: float


def pullback_check(fp, d1, d2, k: int) -> PullbackResult:
    from .development import d_phi

    lhs = w_k(fp.u, d_phi(fp, d1), d_phi(fp, d2), k, fp.grid, fp.params)
    rhs = tau_k(fp, d1, d2, k - 2)
    res = abs(lhs - rhs) / (abs(lhs) + abs(rhs) + np.finfo(float).eps)
    return PullbackResult(lhs, rhs, float(res))


class ConstraintChain(NamedTuple):
    u: np.ndarray
    xi: tuple
    residuals: tuple
    boundary: tuple
    level_residuals: tuple

    def member(self, tol: float = 1e-6) -> bool:
        return all(r < tol for r in self.residuals)


def constraint_residuals(u, du, k: int, grid: Grid, p: OrbitParams) -> ConstraintChain:
    """Build ``xi_{-1}, ..., xi_k`` from ``[xi_{-1}, a] = du``.

    The residual of each level is the right-boundary value of its
    block-diagonal part, which must vanish for the chain to stay decaying.
    """
    if k >= 0:
        raise ValueError("constraint chains need k < 0")
    xi = []
    xperp = -lie.ad_a_inv(lie.perp(du, p), p)
    for _ in range(-k):
        xpar = -cumint(lie.par(lie.ad(u, xperp), p), grid)
        xi.append(xperp + xpar)
        src = ddx(xperp, grid) + lie.ad(u, xpar)
        xperp = -lie.ad_a_inv(lie.perp(src, p), p)
    bound = tuple(lie.par(x[-1], p) for x in xi)
    res = tuple(float(np.linalg.norm(b)) for b in bound)
    lev = [float(np.max(np.abs(lie.ad(xi[0], p.a) - du)))]
    for i in range(len(xi) - 1):
        lhs = ddx_plateau(xi[i], grid) + lie.ad(u, xi[i])
        lev.append(float(np.max(np.abs(lhs - lie.ad(xi[i + 1], p.a)))))
    return ConstraintChain(u, tuple(xi), res, bound, tuple(lev))


def _chain_vector(u, du, depth, grid, p) -> np.ndarray:
    ch = constraint_residuals(u, du, -depth, grid, p)
    b = np.array(ch.boundary)
    return np.concatenate([b.real.ravel(), b.imag.ravel()])


def constrain(u, fields, depth: int, grid: Grid, p: OrbitParams, count: int,
              rng: np.random.Generator) -> list:
    """Random combinations of ``fields`` whose first ``depth`` chain levels close.

    The boundary values are linear in the variation, so admissible
    combinations form the null space of a small matrix.
    """
    C = np.stack([_chain_vector(u, f, depth, grid, p) for f in fields], axis=1)
    _, s, vh = np.linalg.svd(C)
    rank = int(np.sum(s > 1e-10 * max(s[0], 1e-300))) if s.size else 0
    null = vh[rank:].T
    if null.shape[1] == 0:
        raise ValueError("no admissible combinations; supply more basis fields")
    F = np.stack(fields)
    out = []
    for _ in range(count):
        c = null @ rng.normal(size=null.shape[1])
        c /= np.linalg.norm(c)
        out.append(np.tensordot(c, F, axes=1))
    return out


def random_bumps(grid: Grid, p: OrbitParams, count: int, rng: np.random.Generator,
                 width=(0.6, 1.2), span: float = 5.0) -> list:
    """Off-block Gaussian bumps with random centers, widths and directions."""
    out = []
    for _ in range(count):
        c = rng.uniform(-span, span)
        w = rng.uniform(*width)
        z = rng.normal(size=(p.k, p.n - p.k)) + 1j * rng.normal(size=(p.k, p.n - p.k))
        prof = np.exp(-0.5 * ((grid.x - c) / w) ** 2)
        out.append(lie.offblock(prof[:, None, None] * z, p))
    return out
