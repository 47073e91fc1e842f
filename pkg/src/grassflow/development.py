"""Development map between based orbit paths and off-block fields.

``undevelop`` sends a field u to the path ``gamma = g a g^-1`` where
``g^-1 g_x = u`` and ``g(x_0) = I``. ``develop`` inverts it: along the frame,
``[gamma, gamma_x] = g u g^-1``, so the frame solves the linear equation
``g_x = [gamma, gamma_x] g`` and ``u`` is read off by conjugating back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lie
from .calculus import Grid, ddx, ddx_plateau
from .hierarchy import compute_hierarchy, hamiltonian_F
from .lie import DomainError, OrbitParams

BASE_TOL = 1e-6
DRIFT_TOL = 1e-8
CONJ_TOL = 1e-6
SUBSTEPS = 16

_C = np.sqrt(3) / 6  # Gauss nodes sit at 1/2 -+ _C
_K = np.sqrt(3) / 12


@dataclass(frozen=True)
class FramedPath:
    """A path ``gamma`` together with its frame ``g`` and field ``u``.

    ``drift`` is the largest unitarity defect seen before re-projection,
    ``conj_residual`` the largest ``|gamma - g a g^-1|``, and ``par_leak``
    the block-diagonal part discarded when reading ``u`` off (zero for
    ``undevelop``).
    """

    gamma: np.ndarray
    g: np.ndarray
    u: np.ndarray
    grid: Grid
    params: OrbitParams
    drift: float = 0.0
    conj_residual: float = 0.0
    par_leak: float = 0.0

    @property
    def ok(self) -> bool:
        return self.drift < DRIFT_TOL and self.conj_residual < CONJ_TOL

    def frame_conj(self, w: np.ndarray) -> np.ndarray:
        """``g w g^-1`` pointwise."""
        return self.g @ w @ lie.dagger(self.g)

    def frame_unconj(self, w: np.ndarray) -> np.ndarray:
        """``g^-1 w g`` pointwise."""
        return lie.dagger(self.g) @ w @ self.g


def spectral_shift(f: np.ndarray, grid: Grid, theta: float) -> np.ndarray:
    """Values of the trigonometric interpolant at ``x_m + theta*h``."""
    phase = np.exp(1j * grid.wavenumbers * theta * grid.h)
    return np.fft.ifft(grid.reshape(phase, f.ndim) * np.fft.fft(f, axis=0), axis=0)


def transport(A: np.ndarray, grid: Grid, side: str = "right", substeps: int = SUBSTEPS):
    """Solve ``g' = g A`` (right) or ``g' = A g`` (left) from ``g(x_0) = I``.

    Each cell is covered by ``substeps`` fourth-order Magnus steps built from
    the spectral interpolant of A at the Gauss nodes. The cell propagators are
    exact unitaries; the running product is polished by one Newton-Schulz
    step per cell. Returns the frames and the largest defect before polishing.
    """
    N = grid.N
    n = A.shape[-1]
    tau = grid.h / substeps
    sign = 1.0 if side == "right" else -1.0
    prop = np.broadcast_to(np.eye(n, dtype=complex), (N, n, n)).copy()
    for i in range(substeps):
        A1 = spectral_shift(A, grid, (i + 0.5 - _C) / substeps)
        A2 = spectral_shift(A, grid, (i + 0.5 + _C) / substeps)
        omega = 0.5 * tau * (A1 + A2) + sign * _K * tau**2 * lie.ad(A1, A2)
        E = lie.expm_skew(omega)
        prop = prop @ E if side == "right" else E @ prop
    G = np.empty((N, n, n), dtype=complex)
    G[0] = np.eye(n)
    eye = np.eye(n)
    drift = 0.0
    for m in range(N - 1):
        g = G[m] @ prop[m] if side == "right" else prop[m] @ G[m]
        gg = lie.dagger(g) @ g
        drift = max(drift, float(np.max(np.abs(gg - eye))))
        G[m + 1] = g @ (1.5 * eye - 0.5 * gg)
    return G, drift


def undevelop(u, grid: Grid, p: OrbitParams, substeps: int = SUBSTEPS) -> FramedPath:
    """The inverse development: field to based path."""
    u = lie.as_skew(u)
    lie.ad_a_inv(u, p)  # off-block check
    g, drift = transport(u, grid, "right", substeps)
    gamma = g @ p.a @ lie.dagger(g)
    return FramedPath(gamma, g, u, grid, p, drift=drift)


def check_base(gamma: np.ndarray, p: OrbitParams, tol: float = BASE_TOL) -> float:
    dev = float(np.max(np.abs(gamma[0] - p.a)))
    if dev > tol:
        raise DomainError(f"left boundary base point: |gamma(x_0) - a| = {dev:.3e}")
    return dev


def develop(gamma, grid: Grid, p: OrbitParams, substeps: int = SUBSTEPS) -> FramedPath:
    """The development map: based path to field."""
    gamma = lie.as_skew(gamma, tol=1e-9)
    check_base(gamma, p)
    gx = ddx_plateau(gamma, grid)
    W = lie.ad(gamma, gx)
    g, drift = transport(W, grid, "left", substeps)
    full = lie.dagger(g) @ W @ g
    par, u = lie.project(full, p)
    conj = float(np.max(np.abs(gamma - g @ p.a @ lie.dagger(g))))
    return FramedPath(
        gamma, g, u, grid, p, drift=drift, conj_residual=conj,
        par_leak=float(np.max(np.abs(par))),
    )


def tangent_defect(gamma: np.ndarray, delta: np.ndarray) -> float:
    """``max |ad(gamma)^2 delta + delta|``; zero for tangent fields."""
    return float(np.max(np.abs(lie.ad(gamma, lie.ad(gamma, delta)) + delta), initial=0.0))


def d_phi(fp: FramedPath, dgamma: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Differential of the development map at ``fp.gamma``."""
    from .symplectic import p_u

    v = fp.frame_unconj(np.asarray(dgamma, dtype=complex))
    scale = max(1.0, float(np.max(np.abs(v), initial=0.0)))
    leak = float(np.max(np.abs(lie.par(v, fp.params)), initial=0.0))
    if leak > tol * scale:
        raise DomainError(f"variation is not tangent: frame-conjugated par part {leak:.3e}")
    v = lie.perp(v, fp.params)
    return p_u(fp.u, -lie.ad_a_inv(v, fp.params), fp.grid, fp.params).value


def grad_H(fp: FramedPath, j: int):
    """Value of ``H_j = F_j o Phi`` and its L^2 gradient on the path."""
    table = compute_hierarchy(fp.u, fp.grid, fp.params, j + 2)
    grad = fp.frame_conj(lie.perp(table.level(j + 2), fp.params))
    return hamiltonian_F(table, j), grad


def perturb_path(gamma: np.ndarray, xi: np.ndarray, eps: float) -> np.ndarray:
    """``exp(eps xi) gamma exp(-eps xi)``; stays on the orbit exactly."""
    E = lie.expm_skew(eps * xi)
    return E @ gamma @ lie.dagger(E)


@dataclass(frozen=True)
class CovariantChain:
    chain: tuple
    residuals: tuple

    @property
    def ok(self) -> bool:
        return all(r < 1e-6 for r in self.residuals)


def covariant_chain(fp: FramedPath, kmax: int) -> CovariantChain:
    """Iterated covariant derivatives of gamma_x along itself.

    Each step projects the ambient derivative onto the tangent space. The
    residual compares ``g d_x^k u g^-1`` with ``ad(gamma)`` of the k-th term.
    """
    gamma, grid = fp.gamma, fp.grid
    eta = ddx_plateau(gamma, grid)
    chain, res = [], []
    uk = fp.u
    for k in range(kmax + 1):
        if k:
            eta = lie.tangent_projection(gamma, ddx(eta, grid))
            uk = ddx(uk, grid)
        chain.append(eta)
        lhs = fp.frame_conj(uk)
        res.append(float(np.max(np.abs(lhs - lie.ad(gamma, eta)))))
    return CovariantChain(tuple(chain), tuple(res))
