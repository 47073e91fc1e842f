"""The u(n) AKNS hierarchy Q_j(u), its Hamiltonians F_j and their flows."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lie
from .calculus import Grid, cumint, ddx, integrate
from .lie import OrbitParams, ParameterError

# Global orientation of F_j. With +1, F_0 is the L^2 mass of q and the
# pulled-back H_0 is half the Dirichlet energy of the path.
F_SIGN = 1
RECURSION_TOL = 1e-7


@dataclass(frozen=True)
class HierarchyTable:
    """Levels ``Q[0..J]`` of the hierarchy for one field ``u``.

    ``residuals[j]`` is the max-norm residual of level j of the recursion,
    evaluated with an independent full derivative of ``Q[j]``.
    """

    u: np.ndarray
    Q: np.ndarray
    grid: Grid
    params: OrbitParams
    residuals: tuple = field(default=())
    source_leak: tuple = field(default=())

    @property
    def depth(self) -> int:
        return self.Q.shape[0] - 1

    @property
    def ok(self) -> bool:
        return all(r < RECURSION_TOL for r in self.residuals)

    def level(self, j: int) -> np.ndarray:
        if j > self.depth:
            raise ParameterError(f"table depth {self.depth} does not reach Q_{j}")
        return self.Q[j]


def compute_hierarchy(u, grid: Grid, p: OrbitParams, J: int = 6) -> HierarchyTable:
    if J < 0:
        raise ParameterError("depth J must be nonnegative")
    u = np.asarray(u, dtype=complex)
    if u.shape != (grid.N, p.n, p.n):
        raise ParameterError(f"u has shape {u.shape}, expected {(grid.N, p.n, p.n)}")
    lie.ad_a_inv(u, p)  # domain check: u must be off-block
    Q = np.zeros((J + 1, grid.N, p.n, p.n), dtype=complex)
    Q[0] = p.a
    if J >= 1:
        Q[1] = u
    for j in range(1, J):
        qpar, qperp = lie.project(Q[j], p)
        # perp part of (Q_j)_x + [u, Q_j]; the par part of (Q_j)_x cancels
        # against pi_a[u, Q_j^perp] by construction of the previous level
        source = ddx(qperp, grid) + lie.perp(lie.ad(u, qpar), p)
        nxt_perp = lie.ad_a(source, p)
        nxt_par = -cumint(lie.par(lie.ad(u, nxt_perp), p), grid)
        nxt = nxt_perp + nxt_par
        Q[j + 1] = 0.5 * (nxt - lie.dagger(nxt))  # strip FFT round-off outside u(n)
    residuals, leaks = [], []
    for j in range(J):
        src = ddx(Q[j], grid) + lie.ad(u, Q[j])
        r = src - lie.ad(Q[j + 1], p.a)
        residuals.append(float(np.max(np.abs(r))))
        leaks.append(float(np.max(np.abs(lie.par(src, p)))))
    return HierarchyTable(u, Q, grid, p, tuple(residuals), tuple(leaks))


def _qblock(q, p: OrbitParams) -> np.ndarray:
    q = np.asarray(q, dtype=complex)
    if p.n == 2 and p.k == 1 and q.ndim == 1:
        q = q[:, None, None]
    if q.shape[1:] != (p.k, p.n - p.k):
        raise ParameterError(f"block field must have shape (N, {p.k}, {p.n - p.k})")
    return q


def closed_form_Q(q, grid: Grid, p: OrbitParams, j: int) -> np.ndarray:
    """Explicit Q_1, Q_2, Q_3 assembled from the block field q."""
    q = _qblock(q, p)
    if j == 1:
        return lie.offblock(q, p)
    H = lie.dagger
    qx = ddx(q, grid)
    out = np.zeros((grid.N, p.n, p.n), dtype=complex)
    k = p.k
    if j == 2:
        out[:, :k, :k] = -1j * q @ H(q)
        out[:, :k, k:] = 1j * qx
        out[:, k:, :k] = 1j * H(qx)
        out[:, k:, k:] = 1j * H(q) @ q
        return out
    if j == 3:
        qxx = ddx(q, grid, 2)
        out[:, :k, :k] = -q @ H(qx) + qx @ H(q)
        out[:, :k, k:] = -(qxx + 2 * q @ H(q) @ q)
        out[:, k:, :k] = H(qxx) + 2 * H(q) @ q @ H(q)
        out[:, k:, k:] = H(qx) @ q - H(q) @ qx
        return out
    raise ParameterError(f"closed forms exist for j in 1..3, got {j}")


def hamiltonian_F(table: HierarchyTable, j: int) -> float:
    Qj2 = table.level(j + 2)
    dens = lie.trace(Qj2 @ table.params.a)
    return F_SIGN / (j + 1) * float(np.real(integrate(dens, table.grid)))


def grad_F(table: HierarchyTable, j: int) -> np.ndarray:
    """L^2 gradient of F_j with respect to ``<x, y> = -Re tr(xy)``."""
    return F_SIGN * lie.perp(table.level(j + 1), table.params)


def flow_rhs(table: HierarchyTable, j: int) -> np.ndarray:
    """Right-hand side ``[Q_{j+1}, a]`` of the j-th flow."""
    return lie.ad(table.level(j + 1), table.params.a)


def l2_pairing(x, y, grid: Grid) -> float:
    """``int <x, y> dx`` for matrix fields."""
    return float(integrate(lie.inner(x, y), grid))
