"""Grünwald-Letnikov discretizations of Riemann-Liouville integrals and derivatives.

Left operators are lower-triangular Toeplitz matrices acting on node values;
right operators are their transposes, which is what makes the discrete
energy gradient an exact adjoint of the weak form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _quad
from scipy.linalg import toeplitz

from .grid import Grid, GridFunction, _same_grid


class Kind(str, enum.Enum):
    LEFT_DERIVATIVE = "left_derivative"
    RIGHT_DERIVATIVE = "right_derivative"
    LEFT_INTEGRAL = "left_integral"
    RIGHT_INTEGRAL = "right_integral"

    @property
    def is_derivative(self) -> bool:
        return self in (Kind.LEFT_DERIVATIVE, Kind.RIGHT_DERIVATIVE)

    @property
    def is_left(self) -> bool:
        return self in (Kind.LEFT_DERIVATIVE, Kind.LEFT_INTEGRAL)


def _binomial_weights(order: float, count: int) -> np.ndarray:
    # coefficients of (1 - z)^order
    w = np.empty(count)
    w[0] = 1.0
    for k in range(1, count):
        w[k] = w[k - 1] * (1.0 - (order + 1.0) / k)
    return w


@dataclass(frozen=True)
class GLWeights:
    alpha: float
    w: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.w)


def gl_weights(alpha: float, count: int) -> GLWeights:
    """Grünwald-Letnikov weights ``(-1)^k C(alpha, k)`` for ``0 < alpha <= 1``."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    w = _binomial_weights(alpha, count)
    w.flags.writeable = False
    return GLWeights(alpha, w)


@dataclass(frozen=True)
class FracOperator:
    kind: Kind
    alpha: float
    grid: Grid
    matrix: np.ndarray = field(repr=False, compare=False)

    def __call__(self, u) -> np.ndarray:
        return apply(self, u)

    @property
    def T(self) -> np.ndarray:
        return self.matrix.T


def assemble(kind, alpha: float, grid: Grid) -> FracOperator:
    kind = Kind(kind)
    if kind.is_derivative:
        if not 0 < alpha <= 1:
            raise ValueError(f"derivative order must lie in (0, 1], got {alpha}")
        coeffs = _binomial_weights(alpha, grid.size) * grid.h ** (-alpha)
    else:
        if not alpha > 0:
            raise ValueError(f"integral order must be positive, got {alpha}")
        coeffs = _binomial_weights(-alpha, grid.size) * grid.h**alpha
    lower = toeplitz(coeffs, np.zeros(grid.size))
    matrix = lower if kind.is_left else lower.T.copy()
    matrix.flags.writeable = False
    return FracOperator(kind, float(alpha), grid, matrix)


def apply(op: FracOperator, u) -> np.ndarray:
    if isinstance(u, GridFunction):
        _same_grid(op.grid, u.grid)
        u = u.values
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != op.grid.size:
        raise ValueError(f"expected {op.grid.size} node values, got shape {u.shape}")
    return u @ op.matrix.T


def right_gl_matrix(alpha: float, grid: Grid) -> np.ndarray:
    """Right GL derivative built directly from its pointwise formula.

    Row ``i`` holds ``h^-alpha * w_k`` at column ``i + k``. Used only to
    validate the transpose construction of the right derivative.
    """
    w = gl_weights(alpha, grid.size).w
    n = grid.size
    m = np.zeros((n, n))
    for i in range(n):
        for k in range(n - i):
            m[i, i + k] = w[k]
    return m * grid.h ** (-alpha)


def rl_derivative_quadrature(u: Callable, alpha: float, t: float, *, dt: float = 1e-3) -> float:
    """Left RL derivative at ``t`` by quadrature of the defining integral.

    Evaluates ``d/dt [ int_0^t (t-s)^(-alpha) u(s) ds ] / Gamma(1-alpha)``
    with an algebraic-weight rule and a five-point difference in ``t``.
    ``alpha = 1`` falls back to a plain central difference of ``u``.
    """
    if alpha == 1:
        return (u(t - 2 * dt) - 8 * u(t - dt) + 8 * u(t + dt) - u(t + 2 * dt)) / (12 * dt)

    def frac_int(x):
        val, _ = _quad.quad(u, 0.0, x, weight="alg", wvar=(0.0, -alpha),
                            epsabs=1e-14, epsrel=1e-13, limit=200)
        return val / math.gamma(1.0 - alpha)

    dt = min(dt, t / 4.0)
    return (frac_int(t - 2 * dt) - 8 * frac_int(t - dt) + 8 * frac_int(t + dt)
            - frac_int(t + 2 * dt)) / (12 * dt)


def convergence_order(kind, alpha: float, u_exact: Callable, d_exact: Callable | None,
                      N_list: Sequence[int], *, T: float = 1.0, t_min: float | None = None):
    """Observed order of the GL scheme from max errors over ``N_list``.

    Errors are taken over nodes with ``t >= t_min`` (default ``T/4``) and
    below ``T``; the first-order rate of GL does not hold uniformly up to
    ``t = 0`` for functions like ``u(t) = t``. When every N is a multiple of
    the smallest one, only the nodes of the coarsest grid are compared, so
    the reference values are shared. When ``d_exact`` is None they come
    from :func:`rl_derivative_quadrature`.

    Returns ``(order, errors)``.
    """
    N_list = list(N_list)
    if len(N_list) < 2:
        raise ValueError("need at least two grid sizes")
    kind = Kind(kind)
    if kind is not Kind.LEFT_DERIVATIVE:
        raise NotImplementedError("convergence harness covers the left derivative")
    t_min = T / 4.0 if t_min is None else t_min
    n0 = min(N_list)
    nested = all(N % n0 == 0 for N in N_list)
    cache: dict[float, float] = {}

    def reference(ts):
        if d_exact is not None:
            return np.asarray(d_exact(ts), dtype=float)
        out = []
        for t in ts:
            key = round(float(t), 12)
            if key not in cache:
                cache[key] = rl_derivative_quadrature(u_exact, alpha, float(t))
            out.append(cache[key])
        return np.array(out)

    errors = []
    for N in N_list:
        grid = Grid(T, N)
        approx = apply(assemble(kind, alpha, grid), u_exact(grid.nodes))
        idx = np.arange(grid.size)
        mask = (grid.nodes >= t_min) & (idx < grid.N)
        if nested:
            mask &= idx % (N // n0) == 0
        errors.append(float(np.abs(approx[mask] - reference(grid.nodes[mask])).max()))
    slope = np.polyfit(np.log(N_list), np.log(errors), 1)[0]
    return float(-slope), errors


def dump_csv(op: FracOperator, path) -> None:
    np.savetxt(path, op.matrix, delimiter=",", fmt="%.17e")
