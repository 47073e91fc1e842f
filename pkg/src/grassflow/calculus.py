"""Spectral calculus on a periodic grid over [-L, L).

Fields are arrays whose axis 0 runs over grid points; any trailing axes
(matrix entries, batch dimensions) are carried along.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .lie import ParameterError

DECAY_TOL = 1e-8


class DecayWarning(UserWarning):
    """A field that should decay at the boundary does not."""


@dataclass(frozen=True)
class Grid:
    L: float = 20.0
    N: int = 256

    def __post_init__(self):
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ParameterError(f"half-width must be positive, got L={self.L}")
        if int(self.N) != self.N or self.N < 4:
            raise ParameterError(f"need an integer N >= 4, got N={self.N}")

    @property
    def h(self) -> float:
        return 2 * self.L / self.N

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.N)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        k = 2 * np.pi * np.fft.fftfreq(self.N, d=self.h)
        k[self.N // 2] = 0.0  # drop Nyquist so odd derivatives stay real
        return k

    def reshape(self, arr: np.ndarray, ndim: int) -> np.ndarray:
        """Broadcast a length-N vector against an ``ndim`` field."""
        return arr.reshape((self.N,) + (1,) * (ndim - 1))


def _check(f, grid: Grid) -> np.ndarray:
    f = np.asarray(f)
    if f.shape[0] != grid.N:
        raise ParameterError(f"field has {f.shape[0]} samples, grid has {grid.N}")
    return f


def ddx(f, grid: Grid, order: int = 1) -> np.ndarray:
    """Fourier spectral derivative of order ``order``."""
    f = _check(f, grid)
    if order == 0:
        return f.copy()
    ik = grid.reshape((1j * grid.wavenumbers) ** order, f.ndim)
    if order % 2 == 0:
        # even orders keep the Nyquist mode
        k = 2 * np.pi * np.fft.fftfreq(grid.N, d=grid.h)
        ik = grid.reshape((1j * k) ** order, f.ndim)
    out = np.fft.ifft(ik * np.fft.fft(f, axis=0), axis=0)
    return out.real if np.isrealobj(f) else out


def cumint(f, grid: Grid, tol: float = DECAY_TOL) -> np.ndarray:
    """Antiderivative anchored at the left end, ``F(x_0) = 0``.

    Integrates the trigonometric interpolant exactly: the mean contributes a
    linear ramp, the remaining modes are divided by ``ik``.
    """
    f = _check(f, grid)
    left = float(np.max(np.abs(f[0]), initial=0.0))
    if left > tol:
        warnings.warn(f"integrand is {left:.2e} at the left boundary", DecayWarning, stacklevel=2)
    fh = np.fft.fft(f, axis=0)
    mean = fh[0] / grid.N
    k = grid.wavenumbers
    inv = np.zeros_like(k, dtype=complex)
    nz = k != 0
    inv[nz] = 1.0 / (1j * k[nz])
    fh = grid.reshape(inv, f.ndim) * fh
    P = np.fft.ifft(fh, axis=0)
    out = grid.reshape(grid.x - grid.x[0], f.ndim) * mean + (P - P[0])
    return out.real if np.isrealobj(f) else out


def integrate(f, grid: Grid):
    """Periodic trapezoid ``h * sum``; matrix-valued integrands give a matrix."""
    f = _check(f, grid)
    out = grid.h * np.sum(f, axis=0)
    return float(out) if np.ndim(out) == 0 and np.isrealobj(out) else out


def l2_norm(f, grid: Grid) -> float:
    f = _check(f, grid)
    return float(np.sqrt(grid.h * np.sum(np.abs(f) ** 2)))


def boundary_decay(f, grid: Grid, fraction: float = 0.05) -> float:
    """Largest pointwise norm over the outer ``fraction`` of points at each end."""
    f = _check(f, grid)
    m = max(1, int(np.ceil(fraction * grid.N)))
    ends = np.concatenate([f[:m], f[-m:]], axis=0)
    norms = np.sqrt(np.sum(np.abs(ends.reshape(2 * m, -1)) ** 2, axis=1))
    return float(norms.max())


def _step(grid: Grid):
    w = grid.L * np.sqrt(8.0 / (np.pi**2 * grid.N))
    s = 0.5 * (1 + np.tanh(grid.x / w))
    ds = 0.5 / w / np.cosh(grid.x / w) ** 2
    return s, ds


def ddx_plateau(f, grid: Grid) -> np.ndarray:
    """Derivative of a field that tends to different constants at the two ends.

    A smooth step carrying the jump ``f[-1] - f[0]`` is removed, the periodic
    remainder is differentiated spectrally and the step's derivative added
    back. The step width is chosen so its own spectral tail sits below round-off.
    """
    f = _check(f, grid)
    jump = f[-1] - f[0]
    s, ds = _step(grid)
    s = grid.reshape(s, f.ndim)
    ds = grid.reshape(ds, f.ndim)
    return ddx(f - s * jump, grid) + ds * jump
