import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from grassflow.calculus import Grid, ddx, integrate
from grassflow.kdv import (A2, E12, E21, derivation_residuals, j_1, j_minus1, kdv_lax_fields,
                           laurent_from_lax, laurent_pairing, reality_residual, traveling_wave)
from grassflow.lie import DomainError

x_, t_ = sp.symbols("x t", real=True)


def kdv_residual(expr):
    return sp.diff(expr, t_) - (sp.diff(expr, x_, 3) - 6 * expr * sp.diff(expr, x_)) / 4


@pytest.mark.parametrize("c", [sp.Integer(1), sp.Integer(4), sp.Rational(9, 4)])
def test_traveling_wave_substitution(c):
    q = -(c / 2) * sp.sech(sp.sqrt(c) / 2 * (x_ + c * t_ / 4)) ** 2
    res = kdv_residual(q).rewrite(sp.exp)
    assert sp.simplify(res) == 0


def test_traveling_wave_fit():
    # fit A and speed s in q = A sech^2(x/2 - s t/2) from the residual at sample points
    A, s = sp.symbols("A s", real=True)
    q = A * sp.sech((x_ - s * t_) / 2) ** 2
    res = kdv_residual(q)
    eqs = [sp.nsimplify(sp.simplify(res.subs({x_: xv, t_: 0}).rewrite(sp.exp)))
           for xv in (sp.Rational(1, 2), sp.Rational(3, 2))]
    sols = [d for d in sp.solve(eqs, [A, s], dict=True) if d[A] != 0]
    assert sols == [{A: sp.Rational(-1, 2), s: sp.Rational(-1, 4)}]
    g = Grid(20.0, 256)
    np.testing.assert_allclose(traveling_wave(g, 1.0, 0.7),
                               -0.5 / np.cosh(0.5 * (g.x + 0.7 / 4)) ** 2, rtol=0, atol=1e-16)


def test_lax_fields_vacuum(grid):
    F = kdv_lax_fields(np.zeros(grid.N), grid)
    assert not F.Q2.any() and not F.Q3.any()
    np.testing.assert_array_equal(F.u2[7], [[0, 0], [1, 0]])
    np.testing.assert_array_equal(F.a2, A2)


def test_lax_fields_sech2(grid):
    s = 1 / np.cosh(grid.x)
    q = s**2
    qxx = 4 * s**2 - 6 * s**4
    F = kdv_lax_fields(q, grid)
    assert np.abs(F.Q3[:, 0, 1] - (qxx - 2 * s**4) / 4).max() < 1e-9
    assert all(np.isrealobj(f) for f in F)


def test_reality_examples():
    assert reality_residual({1: A2, 0: E21}) == 0
    with pytest.raises(DomainError):
        reality_residual({1: 1j * A2, 0: E21})
    assert reality_residual({}) == 0


def test_reality_perturbation_size():
    for eps in (1e-3, 0.25):
        assert reality_residual({1: A2 + eps * E12, 0: E21}) == pytest.approx(eps)


def test_reality_of_lax_polynomial(grid):
    q = traveling_wave(grid, 1.0) + 0.3 * np.exp(-grid.x**2)
    assert reality_residual(laurent_from_lax(kdv_lax_fields(q, grid))) < 1e-10


def test_reality_of_orbit_chain(grid):
    # order +1 chain: xi = [[A, B], [C, -A]] with C_x + 2A = 0, A_x + qC - B = 0
    q = np.exp(-grid.x**2)
    C = 0.5 * np.exp(-(grid.x - 1) ** 2)
    A = -ddx(C, grid) / 2
    xi0 = np.stack([np.stack([A, A * 0], -1), np.stack([C, -A], -1)], -2)
    xi1 = np.stack([np.stack([C, -2 * A], -1), np.stack([0 * C, -C], -1)], -2)
    assert reality_residual({0: xi0, 1: xi1}) < 1e-8


def test_degenerate_direction_even_k():
    xi = {0: E21, 1: A2, 2: 3 * E21 + 0.5 * A2, 3: np.array([[3.0, -1.0], [0.0, -3.0]])}
    for k in (2, 4):
        assert laurent_pairing({0: E12}, xi, k) == 0
    assert all(abs(laurent_pairing({0: E12}, xi, k)) > 0.5 for k in (1, 3))


def test_j_minus1_examples(grid):
    assert not j_minus1(np.zeros(grid.N), grid).any()
    L = grid.L
    np.testing.assert_allclose(j_minus1(np.sin(np.pi * grid.x / L), grid),
                               -2 * np.pi / L * np.cos(np.pi * grid.x / L), atol=1e-12)


def test_j_1_examples(grid):
    v = np.exp(-grid.x**2)
    np.testing.assert_allclose(j_1(np.zeros(grid.N), v, grid), 0.5 * ddx(v, grid, 3), atol=0)
    q = np.exp(-(grid.x - 1) ** 2)
    np.testing.assert_allclose(j_1(q, np.full(grid.N, 2.5), grid), -2.5 * ddx(q, grid), atol=1e-13)


def bumps(rng, grid, m):
    return sum(rng.normal() * np.exp(-((grid.x - rng.uniform(-3, 3)) / rng.uniform(0.8, 1.5)) ** 2)
               for _ in range(m))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_skew_adjointness(seed):
    g = Grid(20.0, 256)
    rng = np.random.default_rng(seed)
    q, v, w = bumps(rng, g, 2), bumps(rng, g, 2), bumps(rng, g, 2)
    assert abs(integrate(j_minus1(v, g) * w, g) + integrate(v * j_minus1(w, g), g)) < 1e-10
    assert abs(integrate(j_1(q, v, g) * w, g) + integrate(v * j_1(q, w, g), g)) < 1e-9


def test_derivation_trivial_and_vacuum(grid):
    rep = derivation_residuals(np.exp(-grid.x**2), np.zeros(grid.N), grid)
    assert max(rep) == 0
    C = np.exp(-(grid.x - 0.5) ** 2)
    rep = derivation_residuals(np.zeros(grid.N), C, grid)
    assert rep.plus1 < 1e-12 and rep.system_plus1 < 1e-8
    # eliminated delta q = C_xxx / 2 at q = 0
    A = -ddx(C, grid) / 2
    np.testing.assert_allclose(-ddx(ddx(A, grid), grid), 0.5 * ddx(C, grid, 3), atol=1e-12)


def test_derivation_random(grid):
    rng = np.random.default_rng(1)
    for _ in range(10):
        rep = derivation_residuals(bumps(rng, grid, 2), bumps(rng, grid, 2), grid)
        assert max(rep) < 1e-8
