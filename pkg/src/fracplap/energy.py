"""Discrete energy functional, its gradient and the p-Laplacian map."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .fracops import FracOperator, Kind, assemble
from .grid import Grid, GridFunction, _same_grid
from .problem import F_eval, Nonlinearity, f_eval


def default_epsilon(p: float) -> float:
    return 0.0 if p >= 2 else 1e-8


def phi_p(s, p: float, epsilon_reg: float = 0.0):
    """``|s|^(p-2) s``, or ``(s^2 + eps^2)^((p-2)/2) s`` when regularized."""
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    if epsilon_reg < 0:
        raise ValueError("epsilon_reg must be nonnegative")
    s = np.asarray(s, dtype=float)
    if epsilon_reg > 0:
        return (s * s + epsilon_reg**2) ** ((p - 2.0) / 2.0) * s
    if p == 2:
        return s.copy()
    a = np.abs(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(a > 0, a ** (p - 2.0) * s, 0.0)
    return out


def _kinetic_density(s, p, eps):
    if eps > 0:
        return ((s * s + eps * eps) ** (p / 2.0) - eps**p) / p
    return np.abs(s) ** p / p


@dataclass(frozen=True)
class EnergyContext:
    grid: Grid
    left_op: FracOperator
    nl: Nonlinearity
    p: float
    epsilon_reg: float | None = None

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if self.left_op.kind is not Kind.LEFT_DERIVATIVE:
            raise ValueError("left_op must be a left derivative")
        _same_grid(self.grid, self.left_op.grid)
        alpha = self.left_op.alpha
        if not 1.0 / self.p < alpha <= 1:
            raise ValueError(f"alpha={alpha} must lie in (1/p, 1] = ({1.0 / self.p:.6g}, 1]")
        if self.epsilon_reg is None:
            object.__setattr__(self, "epsilon_reg", default_epsilon(self.p))
        if self.epsilon_reg < 0 or (self.p >= 2 and self.epsilon_reg != 0):
            raise ValueError("epsilon_reg must be 0 for p >= 2 and nonnegative otherwise")

    @classmethod
    def build(cls, alpha: float, p: float, nl: Nonlinearity, N: int, T: float | None = None,
              epsilon_reg: float | None = None) -> "EnergyContext":
        grid = Grid(nl.T if T is None else T, N)
        return cls(grid, assemble(Kind.LEFT_DERIVATIVE, alpha, grid), nl, float(p), epsilon_reg)

    @property
    def alpha(self) -> float:
        return self.left_op.alpha

    @cached_property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    @cached_property
    def _gram_factor(self):
        L = self.left_op.matrix
        K = L.T @ (self.weights[:, None] * L)
        inner = K[1:-1, 1:-1]
        return cho_factor(inner)

    # raw-array kernels used by the solver -----------------------------

    def kinetic(self, u: np.ndarray, eps: float | None = None) -> float:
        eps = self.epsilon_reg if eps is None else eps
        Lu = self.left_op.matrix @ u
        return float(self.weights @ _kinetic_density(Lu, self.p, eps))

    def potential(self, u: np.ndarray) -> float:
        return float(self.weights @ F_eval(self.nl, self.grid.nodes, u))

    def value(self, u: np.ndarray, eps: float | None = None) -> float:
        return self.kinetic(u, eps) - self.potential(u)

    def grad(self, u: np.ndarray, eps: float | None = None) -> np.ndarray:
        eps = self.epsilon_reg if eps is None else eps
        L = self.left_op.matrix
        w = self.weights
        g = L.T @ (w * phi_p(L @ u, self.p, eps)) - w * f_eval(self.nl, self.grid.nodes, u)
        g[0] = g[-1] = 0.0
        return g

    def grad_norm(self, g: np.ndarray) -> float:
        return float(np.sqrt(g @ g / self.grid.h))

    def precondition(self, g: np.ndarray) -> np.ndarray:
        """Riesz map of the p = 2 kinetic form: solves ``K d = g`` on interior nodes."""
        d = np.zeros_like(g)
        d[1:-1] = cho_solve(self._gram_factor, g[1:-1])
        return d


@dataclass(frozen=True)
class EnergyReport:
    value: float
    kinetic: float
    potential: float
    grad_norm: float = field(default=float("nan"))

    def to_dict(self) -> dict:
        return {"value": self.value, "kinetic": self.kinetic,
                "potential": self.potential, "grad_norm": self.grad_norm}


def _vals(ctx: EnergyContext, u) -> np.ndarray:
    if isinstance(u, GridFunction):
        _same_grid(ctx.grid, u.grid)
        return u.values
    return np.asarray(u, dtype=float)


def energy(ctx: EnergyContext, u) -> EnergyReport:
    x = _vals(ctx, u)
    kin = ctx.kinetic(x)
    pot = ctx.potential(x)
    gn = ctx.grad_norm(ctx.grad(x, eps=0.0))
    return EnergyReport(kin - pot, kin, pot, gn)


def gradient(ctx: EnergyContext, u, *, eps: float | None = None) -> np.ndarray:
    return ctx.grad(_vals(ctx, u), eps)


def weak_residual(ctx: EnergyContext, u, v, *, eps: float | None = None) -> float:
    """``sum w phi_p(Lu) Lv - sum w f(t, u) v``, the discrete weak form."""
    eps = ctx.epsilon_reg if eps is None else eps
    x, y = _vals(ctx, u), _vals(ctx, v)
    L = ctx.left_op.matrix
    w = ctx.weights
    return float(w @ (phi_p(L @ x, ctx.p, eps) * (L @ y))
                 - w @ (f_eval(ctx.nl, ctx.grid.nodes, x) * y))
