import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma as sp_gamma

from fracplap.fracops import (Kind, apply, assemble, convergence_order, dump_csv, gl_weights,
                              right_gl_matrix, rl_derivative_quadrature)
from fracplap.grid import Grid, GridFunction

alphas = st.floats(0.05, 1.0)


def test_gl_weights_examples():
    assert np.allclose(gl_weights(1.0, 3).w, [1, -1, 0])
    w = gl_weights(0.5, 3).w
    assert np.allclose(w, [1, -0.5, -0.125])
    assert w.sum() == pytest.approx(0.375)


@pytest.mark.parametrize("alpha", [0.0, -0.5, 1.5])
def test_gl_weights_reject_order(alpha):
    with pytest.raises(ValueError):
        gl_weights(alpha, 4)


@given(alpha=alphas, n=st.integers(2, 300))
def test_gl_weight_signs_and_partial_sums(alpha, n):
    w = gl_weights(alpha, n).w
    assert w[0] == 1 and w[1] == pytest.approx(-alpha)
    assert np.all(w[1:] <= 0)
    assert np.all(np.cumsum(w) >= -1e-14)


def test_gamma_cross_check():
    for x in np.linspace(0.05, 10, 50):
        assert math.gamma(x) == pytest.approx(sp_gamma(x), rel=1e-13)
    assert math.gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)


def test_left_derivative_alpha_one_is_backward_difference():
    g = Grid(1.0, 32)
    u = g.nodes.copy()
    d = apply(assemble(Kind.LEFT_DERIVATIVE, 1.0, g), u)
    assert np.allclose(d[1:], 1.0, atol=1e-12)
    v = np.sin(np.pi * g.nodes)
    v[-1] = 0.0
    d = apply(assemble("left_derivative", 1.0, g), v)
    assert np.allclose(d[1:], np.diff(v) / g.h, atol=1e-12)


def test_half_derivative_of_t_at_one():
    g = Grid(1.0, 1024)
    d = apply(assemble(Kind.LEFT_DERIVATIVE, 0.5, g), g.nodes)
    target = 2 / math.sqrt(math.pi)
    assert abs(d[-1] - target) < 2 * g.h
    assert rl_derivative_quadrature(lambda t: t, 0.5, 1.0) == pytest.approx(target, abs=1e-10)


def test_left_integral_alpha_one_running_integral():
    g = Grid(1.0, 128)
    d = apply(assemble(Kind.LEFT_INTEGRAL, 1.0, g), np.ones(g.size))
    assert d[-1] == pytest.approx(1.0, abs=2 * g.h)


def test_apply_zero_and_linearity(rng):
    g = Grid(1.0, 64)
    u, v = rng.normal(size=g.size), rng.normal(size=g.size)
    for kind in Kind:
        op = assemble(kind, 0.7, g)
        assert np.all(apply(op, np.zeros(g.size)) == 0)
        lhs = apply(op, 2.5 * u - 1.5 * v)
        rhs = 2.5 * apply(op, u) - 1.5 * apply(op, v)
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * np.abs(rhs).max())


def test_reflection_identity():
    g = Grid(1.0, 128)
    u = GridFunction.from_callable(g, lambda t: t**2 * (1 - t)).values
    left = apply(assemble(Kind.LEFT_DERIVATIVE, 0.6, g), u)
    right = apply(assemble(Kind.RIGHT_DERIVATIVE, 0.6, g), u[::-1])
    assert np.allclose(left, right[::-1], atol=1e-12)


def test_right_is_transpose_and_matches_direct_formula():
    g = Grid(1.0, 64)
    L = assemble(Kind.LEFT_DERIVATIVE, 0.75, g)
    R = assemble(Kind.RIGHT_DERIVATIVE, 0.75, g)
    assert np.array_equal(R.matrix, L.matrix.T)
    assert np.abs(right_gl_matrix(0.75, g) - R.matrix).max() <= 10 * g.h


def test_right_derivative_sign_at_alpha_one():
    g = Grid(1.0, 512)
    u = np.sin(np.pi * g.nodes)
    u[-1] = 0.0
    d = apply(assemble(Kind.RIGHT_DERIVATIVE, 1.0, g), u)
    inner = slice(1, g.N)
    assert np.abs(d[inner] + np.pi * np.cos(np.pi * g.nodes[inner])).max() < 10 * g.h


@pytest.mark.parametrize("kind", list(Kind))
def test_toeplitz_triangular_structure(kind):
    g = Grid(1.0, 24)
    m = assemble(kind, 0.4, g).matrix
    for k in range(-g.N, g.N + 1):
        diag = np.diagonal(m, k)
        assert np.all(diag == diag[0])
    tri = np.triu(m, 1) if kind.is_left else np.tril(m, -1)
    assert np.all(tri == 0)


def test_derivative_inverts_integral():
    g = Grid(1.0, 256)
    u = GridFunction.from_callable(g, lambda t: np.sin(np.pi * t) ** 2).values
    D = assemble(Kind.LEFT_DERIVATIVE, 0.6, g)
    I = assemble(Kind.LEFT_INTEGRAL, 0.6, g)
    assert np.abs(apply(D, apply(I, u)) - u).max() <= g.h


@pytest.mark.parametrize("alpha, u", [(0.5, lambda t: t), (0.75, lambda t: t**2)])
def test_convergence_order_examples(alpha, u):
    order, errs = convergence_order(Kind.LEFT_DERIVATIVE, alpha, u, None, [64, 128, 256])
    assert 0.8 <= order <= 1.2
    assert errs[0] > errs[1] > errs[2]


def test_convergence_order_alpha_one_with_exact_derivative():
    order, _ = convergence_order(Kind.LEFT_DERIVATIVE, 1.0, lambda t: t**2, lambda t: 2 * t,
                                 [64, 128, 256])
    assert order == pytest.approx(1.0, abs=0.05)


def test_convergence_order_input_checks():
    with pytest.raises(ValueError):
        convergence_order(Kind.LEFT_DERIVATIVE, 0.5, lambda t: t, None, [64])
    with pytest.raises(NotImplementedError):
        convergence_order(Kind.RIGHT_DERIVATIVE, 0.5, lambda t: t, None, [64, 128])


@settings(max_examples=25, deadline=None)
@given(alpha=alphas, seed=st.integers(0, 2**32 - 1))
def test_adjoint_identity_property(alpha, seed):
    g = Grid(1.0, 64)
    r = np.random.default_rng(seed)
    u, v = r.normal(size=g.size), r.normal(size=g.size)
    u[[0, -1]] = v[[0, -1]] = 0
    L = assemble(Kind.LEFT_DERIVATIVE, alpha, g).matrix
    R = assemble(Kind.RIGHT_DERIVATIVE, alpha, g).matrix
    scale = np.linalg.norm(L @ u) * np.linalg.norm(v)
    assert abs((L @ u) @ v - u @ (R @ v)) <= 1e-12 * scale


def test_dump_csv_round_trip(tmp_path):
    op = assemble(Kind.LEFT_DERIVATIVE, 0.75, Grid(1.0, 8))
    path = tmp_path / "op.csv"
    dump_csv(op, path)
    back = np.loadtxt(path, delimiter=",")
    assert np.array_equal(back, op.matrix)
    assert "e+" in path.read_text().split(",")[0]


def test_assemble_rejects_bad_orders():
    g = Grid(1.0, 8)
    with pytest.raises(ValueError):
        assemble(Kind.LEFT_DERIVATIVE, 1.2, g)
    with pytest.raises(ValueError):
        assemble(Kind.LEFT_INTEGRAL, 0.0, g)
    with pytest.raises(ValueError):
        assemble("caputo", 0.5, g)
