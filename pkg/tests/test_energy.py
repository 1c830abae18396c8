import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracplap.energy import EnergyContext, energy, gradient, phi_p, weak_residual
from fracplap.grid import Grid, GridFunction, lp_norm
from fracplap.problem import Coefficient, Nonlinearity
from fracplap.solver import bump
from fracplap.space import random_bumps


def zero_f(T=1.0):
    return Nonlinearity.custom(lambda t, x: 0.0 * x, lambda t, x: 0.0 * x, T=T)


def test_phi_p_examples():
    s = np.linspace(-3, 3, 13)
    assert np.array_equal(phi_p(s, 2.0), s)
    assert phi_p(-2.0, 3.0) == -4.0
    assert phi_p(0.0, 1.5) == 0.0
    with pytest.raises(ValueError):
        phi_p(1.0, 1.0)
    with pytest.raises(ValueError):
        phi_p(1.0, 1.5, -1.0)


@given(s=st.floats(-100, 100), p=st.floats(1.05, 1.95), eps=st.floats(1e-10, 1e-2))
def test_regularization_continuity(s, p, eps):
    gap = abs(phi_p(s, p, eps) - phi_p(s, p, 0.0))
    bound = eps ** (p - 1) + (eps * abs(s) ** (p - 2) if s != 0 else 0.0)
    assert gap <= bound * (1 + 1e-12) + 1e-300


def test_context_invariants():
    nl = Nonlinearity.power(1.5, 1.0)
    with pytest.raises(ValueError, match="1/p"):
        EnergyContext.build(0.5, 2.0, nl, 64)
    with pytest.raises(ValueError):
        EnergyContext.build(0.75, 2.0, nl, 64, epsilon_reg=1e-8)
    assert EnergyContext.build(0.8, 1.5, nl, 64).epsilon_reg == 1e-8
    assert EnergyContext.build(0.8, 2.5, nl, 64).epsilon_reg == 0.0


def test_energy_of_zero(ref_ctx):
    rep = energy(ref_ctx, GridFunction.zeros(ref_ctx.grid))
    assert (rep.value, rep.kinetic, rep.potential) == (0.0, 0.0, 0.0)
    assert np.all(gradient(ref_ctx, np.zeros(ref_ctx.grid.size)) == 0)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_scaling_law_without_potential(p):
    # exact homogeneity needs the unregularized kinetic term
    ctx = EnergyContext.build(0.9, p, zero_f(), 128, epsilon_reg=0.0)
    u = GridFunction.from_callable(ctx.grid, lambda t: np.sin(np.pi * t) * t)
    for s in (0.3, 2.0, 7.5):
        assert energy(ctx, s * u).value == pytest.approx(s**p * energy(ctx, u).value, rel=1e-12)


def test_energy_terms_by_direct_summation(ref_ctx):
    g = ref_ctx.grid
    u = bump(g, 0.0, 1.0)
    rep = energy(ref_ctx, u)
    Lu = np.array([sum(ref_ctx.left_op.matrix[i, j] * u[j] for j in range(i + 1))
                   for i in range(g.size)])
    kin = 0.5 * lp_norm(Lu, 2.0, g) ** 2
    pot = lp_norm(u, 1.5, g) ** 1.5
    assert rep.kinetic == pytest.approx(kin, rel=1e-12)
    assert rep.potential == pytest.approx(pot, rel=1e-12)
    assert rep.value == pytest.approx(rep.kinetic - rep.potential, abs=1e-12)
    fine = Grid(1.0, 2 * g.N)
    pot_fine = lp_norm(bump(fine, 0.0, 1.0), 1.5, fine) ** 1.5
    assert pot == pytest.approx(pot_fine, rel=1e-3)


def test_gradient_at_alpha_one_is_discrete_laplacian():
    ctx = EnergyContext.build(1.0, 2.0, zero_f(), 64)
    g = ctx.grid
    u = GridFunction.from_callable(g, lambda t: np.sin(2 * np.pi * t) + t * (1 - t)).values
    L = ctx.left_op.matrix
    expect = L.T @ (g.weights * (L @ u))
    expect[[0, -1]] = 0
    assert np.allclose(gradient(ctx, u), expect, atol=1e-12 * np.abs(expect).max())
    d2 = (u[2:] - 2 * u[1:-1] + u[:-2]) / g.h**2
    assert np.allclose(gradient(ctx, u)[1:-2] / g.h, -d2[:-1], atol=1e-9 * np.abs(d2).max())


def test_weak_residual_matches_gradient_and_is_odd(ref_ctx, rng):
    samples = random_bumps(ref_ctx.grid, 40, rng)
    for u, v in zip(samples[::2], samples[1::2]):
        r = weak_residual(ref_ctx, u, v)
        assert r == pytest.approx(gradient(ref_ctx, u) @ v.values, abs=1e-12 * (1 + abs(r)))
        assert weak_residual(ref_ctx, -u, v) == pytest.approx(-r, abs=1e-14 * (1 + abs(r)))
    assert weak_residual(ref_ctx, GridFunction.zeros(ref_ctx.grid), samples[0]) == 0.0


def test_energy_even_under_oddness(ref_ctx, rng):
    for u in random_bumps(ref_ctx.grid, 50, rng):
        assert abs(energy(ref_ctx, -u).value - energy(ref_ctx, u).value) <= 1e-12


def test_grid_mismatch_rejected(ref_ctx):
    with pytest.raises(ValueError):
        energy(ref_ctx, GridFunction.zeros(Grid(1.0, 32)))


def test_report_values_round():
    ctx = EnergyContext.build(0.75, 2.0, Nonlinearity.power(1.5, 1.0), 64)
    rep = energy(ctx, 0.01 * bump(ctx.grid, 0.1, 0.9))
    d = rep.to_dict()
    assert set(d) == {"value", "kinetic", "potential", "grad_norm"}
    assert rep.value < 0 and rep.grad_norm > 0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6), p=st.sampled_from([2.0, 2.5, 4.0]))
def test_gradient_fd_property_smooth_regime(seed, p):
    # r = 2 keeps the potential smooth, so the central difference is a true oracle
    nl = Nonlinearity.power(2.0, Coefficient(1.0, samples=(0.5, 1.5)))
    ctx = EnergyContext.build(0.9, p, nl, 64)
    r = np.random.default_rng(seed)
    t = ctx.grid.nodes
    u = sum(r.normal() * np.sin(k * np.pi * t) for k in range(1, 5))
    v = sum(r.normal() * np.sin(k * np.pi * t) for k in range(1, 5))
    u[[0, -1]] = v[[0, -1]] = 0
    tau = 1e-5
    fd = (ctx.value(u + tau * v) - ctx.value(u - tau * v)) / (2 * tau)
    an = ctx.grad(u) @ v
    assert abs(fd - an) <= 1e-5 * max(abs(an), 1e-3)
