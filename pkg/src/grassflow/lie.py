"""Finite-dimensional u(n) algebra around the Grassmannian base point.

All functions broadcast over leading axes, so a field sampled on a grid
(shape ``(N, n, n)``) can be passed anywhere a single matrix is accepted.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

SKEW_TOL = 1e-12


class ParameterError(ValueError):
    """Invalid orbit or grid parameters."""


class DomainError(ValueError):
    """An argument lies outside the subspace an operator is defined on."""


@dataclass(frozen=True)
class OrbitParams:
    """Sizes ``(n, k)`` of the orbit through ``a = diag(i/2 I_k, -i/2 I_{n-k})``."""

    n: int
    k: int

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and isinstance(self.k, (int, np.integer))):
            raise ParameterError(f"n and k must be integers, got {self.n!r}, {self.k!r}")
        if not 1 <= self.k < self.n:
            raise ParameterError(f"need 1 <= k < n, got n={self.n}, k={self.k}")

    @cached_property
    def diag(self) -> np.ndarray:
        d = np.full(self.n, -0.5j)
        d[: self.k] = 0.5j
        return d

    @cached_property
    def a(self) -> np.ndarray:
        return np.diag(self.diag)

    @cached_property
    def par_mask(self) -> np.ndarray:
        """Boolean mask of the two diagonal blocks (the centralizer of a)."""
        m = np.zeros((self.n, self.n), dtype=bool)
        m[: self.k, : self.k] = True
        m[self.k :, self.k :] = True
        return m

    @cached_property
    def ad_a_symbol(self) -> np.ndarray:
        # ad(a) acts entrywise: (a_ii - a_jj) x_ij
        return self.diag[:, None] - self.diag[None, :]

    @property
    def perp_dim(self) -> int:
        """Real dimension of the off-block subspace."""
        return 2 * self.k * (self.n - self.k)


def make_base_point(n: int, k: int) -> OrbitParams:
    return OrbitParams(n, k)


class BlockSplit(NamedTuple):
    par: np.ndarray
    perp: np.ndarray


def dagger(x: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(x, -1, -2))


def skew_defect(x: np.ndarray) -> float:
    x = np.asarray(x)
    return float(np.max(np.abs(x + dagger(x)), initial=0.0))


def as_skew(x, tol: float = SKEW_TOL) -> np.ndarray:
    """Symmetrize ``x`` onto u(n), rejecting inputs further than ``tol`` away.

    The tolerance is relative to the largest entry so that large hierarchy
    levels are not rejected for round-off.
    """
    x = np.asarray(x, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(x), initial=0.0)))
    if skew_defect(x) > tol * scale:
        raise DomainError(f"not skew-Hermitian: defect {skew_defect(x):.3e}")
    return 0.5 * (x - dagger(x))


def trace(x: np.ndarray) -> np.ndarray:
    return np.trace(x, axis1=-2, axis2=-1)


def inner(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Invariant inner product ``-Re tr(xy)``."""
    x, y = np.asarray(x), np.asarray(y)
    if x.shape[-2:] != y.shape[-2:]:
        raise ParameterError(f"dimension mismatch {x.shape[-2:]} vs {y.shape[-2:]}")
    return -np.einsum("...ij,...ji->...", x, y).real


def project(x: np.ndarray, p: OrbitParams) -> BlockSplit:
    x = np.asarray(x)
    if x.shape[-2:] != (p.n, p.n):
        raise ParameterError(f"expected trailing shape {(p.n, p.n)}, got {x.shape[-2:]}")
    par = np.where(p.par_mask, x, 0)
    return BlockSplit(par, x - par)


def par(x: np.ndarray, p: OrbitParams) -> np.ndarray:
    return np.where(p.par_mask, x, 0)


def perp(x: np.ndarray, p: OrbitParams) -> np.ndarray:
    return np.where(p.par_mask, 0, x)


def ad(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x, y = np.asarray(x), np.asarray(y)
    if x.shape[-2:] != y.shape[-2:]:
        raise ParameterError(f"dimension mismatch {x.shape[-2:]} vs {y.shape[-2:]}")
    return x @ y - y @ x


def ad_a(v: np.ndarray, p: OrbitParams) -> np.ndarray:
    """``[a, v]``, computed entrywise since a is diagonal."""
    return p.ad_a_symbol * v


def ad_a_inv(v: np.ndarray, p: OrbitParams, tol: float = 1e-10) -> np.ndarray:
    """Inverse of ad(a) on the off-block subspace.

    ad(a)^2 = -id there, so the inverse is -ad(a).
    """
    v = np.asarray(v)
    scale = max(1.0, float(np.max(np.abs(v), initial=0.0)))
    leak = float(np.max(np.abs(par(v, p)), initial=0.0))
    if leak > tol * scale:
        raise DomainError(f"ad(a)^-1 needs an off-block argument; block-diagonal part {leak:.3e}")
    return -ad_a(v, p)


def offblock(q: np.ndarray, p: OrbitParams) -> np.ndarray:
    """Embed a k x (n-k) block field q as [[0, q], [-q*, 0]]."""
    q = np.asarray(q, dtype=complex)
    if p.k == 1 and p.n == 2 and (q.ndim < 2 or q.shape[-2:] != (1, 1)):
        q = q[..., None, None]  # scalar-valued q for the 2x2 case
    if q.shape[-2:] != (p.k, p.n - p.k):
        raise ParameterError(f"block must have trailing shape {(p.k, p.n - p.k)}, got {q.shape}")
    out = np.zeros(q.shape[:-2] + (p.n, p.n), dtype=complex)
    out[..., : p.k, p.k :] = q
    out[..., p.k :, : p.k] = -dagger(q)
    return out


def block(u: np.ndarray, p: OrbitParams) -> np.ndarray:
    """Top-right k x (n-k) block of an off-block field."""
    return np.asarray(u)[..., : p.k, p.k :]


def orbit_residual(x: np.ndarray, p: OrbitParams) -> np.ndarray:
    """Zero exactly on the adjoint orbit of a.

    ``x^2 = -I/4`` pins the spectrum to {i/2, -i/2}; the trace fixes the
    multiplicities.
    """
    x = np.asarray(x)
    eye = np.eye(p.n)
    alg = np.linalg.norm(x @ x + 0.25 * eye, axis=(-2, -1))
    tr = np.abs(trace(-1j * x) - (2 * p.k - p.n) / 2)
    return alg + tr


def tangent_projection(gamma: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto T_gamma M, ``-ad(gamma)^2 w``."""
    return -ad(gamma, ad(gamma, w))


def project_to_orbit(x: np.ndarray, p: OrbitParams) -> np.ndarray:
    """Nearest orbit point: keep the eigenvectors, snap the eigenvalues."""
    h = 0.5j * (dagger(x) - x)  # Hermitian part of -i x
    w, v = np.linalg.eigh(h)
    snapped = np.full(w.shape, -0.5)
    snapped[..., p.n - p.k :] = 0.5  # eigh sorts ascending
    return 1j * (v * snapped[..., None, :]) @ dagger(v)


def expm_skew(x: np.ndarray) -> np.ndarray:
    """Batched matrix exponential of skew-Hermitian matrices (exactly unitary)."""
    h = 0.5j * (x - dagger(x))  # = i x for skew x
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w)[..., None, :]) @ dagger(v)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_skew(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (z - dagger(z))
