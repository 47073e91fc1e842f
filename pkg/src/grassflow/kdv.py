"""KdV structures: 2x2 Lax fields, the reality pattern of Laurent
coefficients, and the two Poisson operators."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .calculus import Grid, ddx
from .lie import DomainError

A2 = np.diag([1.0, -1.0])
E12 = np.array([[0.0, 1.0], [0.0, 0.0]])
E21 = np.array([[0.0, 0.0], [1.0, 0.0]])


class KdVLaxFields(NamedTuple):
    a2: np.ndarray
    u2: np.ndarray
    Q2: np.ndarray
    Q3: np.ndarray


def _mat(a, b, c, d) -> np.ndarray:
    return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)


def kdv_lax_fields(q, grid: Grid) -> KdVLaxFields:
    q = np.asarray(q, dtype=float)
    qx, qxx = ddx(q, grid), ddx(q, grid, 2)
    z, one = np.zeros_like(q), np.ones_like(q)
    return KdVLaxFields(
        A2.copy(),
        _mat(z, q, one, z),
        _mat(-q / 2, -qx / 2, z, q / 2),
        _mat(qx / 4, (qxx - 2 * q**2) / 4, -q / 2, -qx / 4),
    )


def kdv_u2_dot(q_dot) -> np.ndarray:
    """Time derivative of ``u2`` given ``q_t``."""
    z = np.zeros_like(q_dot)
    return _mat(z, q_dot, z, z)


def laurent_from_lax(F: KdVLaxFields) -> dict:
    """``a lambda^3 + u2 lambda^2 + Q2 lambda + Q3`` as a coefficient map."""
    N = F.u2.shape[0]
    return {3: np.broadcast_to(F.a2, (N, 2, 2)), 2: F.u2, 1: F.Q2, 0: F.Q3}


def reality_residual(coeffs: dict, tol: float = 1e-12) -> float:
    """Largest deviation of ``xi_{2j+1}`` from ``[[C, -2A], [0, -C]]`` built
    from ``xi_{2j} = [[A, *], [C, *]]``.

    Coefficients may be single matrices or fields of matrices. Every odd index
    whose even neighbour below lies in the support is checked, so an even top
    coefficient forces a constraint on the (absent, zero) next one.
    """
    if not coeffs:
        return 0.0
    arrs = {}
    for j, c in coeffs.items():
        c = np.asarray(c)
        if np.iscomplexobj(c):
            if np.max(np.abs(c.imag), initial=0.0) > tol:
                raise DomainError("reality pattern needs real coefficients")
            c = c.real
        arrs[int(j)] = c
    shape = np.broadcast_shapes(*(c.shape for c in arrs.values()))
    zero = np.zeros(shape)
    lo, hi = min(arrs), max(arrs)
    worst = 0.0
    for m in range(lo + 1, hi + 2):
        if m % 2 == 0:
            continue
        even = arrs.get(m - 1, zero)
        A, C = even[..., 0, 0], even[..., 1, 0]
        want = _mat(C, -2 * A, np.zeros_like(C), -C)
        got = arrs.get(m, zero)
        worst = max(worst, float(np.max(np.abs(got - want), initial=0.0)))
    return worst


def laurent_pairing(xi: dict, eta: dict, k: int) -> float:
    """``<xi, eta>_k = sum_i tr(xi_i eta_{k-1-i})`` for matrix coefficients."""
    total = 0.0
    for i, x in xi.items():
        y = eta.get(k - 1 - i)
        if y is not None:
            total += float(np.real(np.trace(np.asarray(x) @ np.asarray(y))))
    return total


def j_minus1(v, grid: Grid) -> np.ndarray:
    return -2 * ddx(v, grid)


def j_1(q, v, grid: Grid) -> np.ndarray:
    return 0.5 * ddx(v, grid, 3) - 2 * q * ddx(v, grid) - ddx(q, grid) * v


class DerivationReport(NamedTuple):
    minus1: float
    plus1: float
    system_minus1: float
    system_plus1: float


def derivation_residuals(q, c_field, grid: Grid) -> DerivationReport:
    """Re-derive both operators by eliminating the first-order systems.

    ``minus1``/``plus1`` compare the eliminated ``delta q`` with the closed
    forms; ``system_*`` confirm the assembled matrices satisfy their systems.
    """
    q = np.asarray(q, dtype=float)
    C = np.asarray(c_field, dtype=float)
    # order -1: A_{-1} = C_{-2}, B_{-1} = (A_{-1})_x, delta q = -2 B_{-1}
    A1 = C
    B1 = ddx(A1, grid)
    dq1 = -2 * B1
    sys1 = float(np.max(np.abs(ddx(A1, grid) - B1), initial=0.0))
    r1 = float(np.max(np.abs(dq1 - j_minus1(C, grid)), initial=0.0))
    # order +1: C_x + 2A = 0, A_x + qC - B = 0, 2qA - B_x = delta q
    A = -ddx(C, grid) / 2
    B = ddx(A, grid) + q * C
    dq = 2 * q * A - ddx(B, grid)
    xi = _mat(A, B, C, -A)
    N = _mat(np.zeros_like(q), q, np.ones_like(q), np.zeros_like(q))
    lhs = ddx(xi, grid) + N @ xi - xi @ N
    sys2 = float(np.max(np.abs(lhs + dq[:, None, None] * E12), initial=0.0))
    r2 = float(np.max(np.abs(dq - j_1(q, C, grid)), initial=0.0))
    return DerivationReport(r1, r2, sys1, sys2)


def traveling_wave(grid: Grid, c: float = 1.0, t: float = 0.0) -> np.ndarray:
    """``q = -(c/2) sech^2((sqrt(c)/2)(x + c t / 4))``, a left-moving wave."""
    return -(c / 2) / np.cosh(0.5 * np.sqrt(c) * (grid.x + c * t / 4)) ** 2
