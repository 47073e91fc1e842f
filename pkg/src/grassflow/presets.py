"""Deterministic preset fields."""

from __future__ import annotations

import numpy as np

from . import lie
from .calculus import Grid
from .development import undevelop
from .io import FieldData
from .kdv import traveling_wave
from .lie import OrbitParams, ParameterError

PRESETS = ("vacuum", "soliton", "gaussian", "developed-soliton", "kdv-wave")


def soliton_block(grid: Grid, p: OrbitParams) -> np.ndarray:
    q = np.zeros((grid.N, p.k, p.n - p.k), dtype=complex)
    q[:, 0, 0] = 1 / np.cosh(grid.x)
    return q


def gaussian_block(grid: Grid, p: OrbitParams, seed: int, bumps: int = 3,
                   amplitude: float = 0.4) -> np.ndarray:
    """Sum of Gaussian bumps with seeded centers in [-3, 3], widths in
    [0.7, 1.3] and complex matrix amplitudes."""
    rng = np.random.default_rng(seed)
    shape = (p.k, p.n - p.k)
    q = np.zeros((grid.N,) + shape, dtype=complex)
    for _ in range(bumps):
        c = rng.uniform(-3, 3)
        s = rng.uniform(0.7, 1.3)
        z = amplitude * (rng.normal(size=shape) + 1j * rng.normal(size=shape))
        q += z * np.exp(-0.5 * ((grid.x - c) / s) ** 2)[:, None, None]
    return q


def make_field(preset: str, n: int = 2, k: int = 1, L: float = 20.0, N: int = 256,
               seed: int = 42, c: float = 1.0) -> FieldData:
    grid = Grid(L, N)
    meta = {"preset": preset, "seed": seed}
    if preset == "kdv-wave":
        meta["c"] = c
        return FieldData("scalar_field", traveling_wave(grid, c), grid, None, meta)
    p = OrbitParams(n, k)
    if preset == "vacuum":
        return FieldData("skew_field", np.zeros((N, n, n), dtype=complex), grid, p, meta)
    if preset == "soliton":
        return FieldData("skew_field", lie.offblock(soliton_block(grid, p), p), grid, p, meta)
    if preset == "gaussian":
        u = lie.offblock(gaussian_block(grid, p, seed), p)
        return FieldData("skew_field", u, grid, p, meta)
    if preset == "developed-soliton":
        fp = undevelop(lie.offblock(soliton_block(grid, p), p), grid, p)
        return FieldData("grassmann_path", fp.gamma, grid, p, meta)
    raise ParameterError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
