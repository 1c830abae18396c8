"""scikit-learn style wrappers around the operator and solver modules.

Grid functions are rows of a 2-D array with ``N + 1`` columns, one per node.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .config import config_from_dict
from .fracops import Kind, assemble
from .grid import GridFunction, make_grid
from .problem import Nonlinearity
from .solver import bump, genus_seeds, minimize, multistart, scaling_probe


def check_grid_values(X, n_nodes: int | None = None) -> np.ndarray:
    """Validate a batch of nodal values: finite, 2-D, matching node count."""
    X = check_array(X, dtype=np.float64, ensure_2d=False)
    if X.ndim == 1:
        X = X[None, :]
    if n_nodes is not None and X.shape[1] != n_nodes:
        raise ValueError(f"expected {n_nodes} nodal values per row, got {X.shape[1]}")
    if X.shape[1] < 9:
        raise ValueError("need at least 9 nodes (N >= 8)")
    return X


def _nonlinearity(spec, T: float) -> Nonlinearity:
    if spec is None:
        return Nonlinearity.power(1.5, 1.0, T=T)
    if isinstance(spec, Nonlinearity):
        return spec
    return Nonlinearity.from_dict(spec, T)


class FractionalDerivative(TransformerMixin, BaseEstimator):
    """Apply a discrete fractional derivative or integral to rows of nodal values."""

    def __init__(self, alpha: float = 0.75, kind: str = "left_derivative", T: float = 1.0):
        self.alpha = alpha
        self.kind = kind
        self.T = T

    def fit(self, X, y=None):
        X = check_grid_values(X)
        self.grid_ = make_grid(self.T, X.shape[1] - 1)
        self.operator_ = assemble(Kind(self.kind), self.alpha, self.grid_)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "operator_")
        X = check_grid_values(X, self.n_features_in_)
        return X @ self.operator_.matrix.T


class _ProblemEstimator(BaseEstimator):
    def _config(self):
        raw = {
            "problem": {"alpha": self.alpha, "p": self.p, "T": self.T, "N": self.N,
                        "nonlinearity": _nonlinearity(self.nonlinearity, self.T).to_dict()},
            "solver": {"max_iters": self.max_iters, "grad_tol": self.grad_tol},
        }
        return config_from_dict(raw)

    def _interp(self, t, values):
        t = check_array(np.asarray(t, dtype=float).reshape(-1, 1)).ravel()
        if np.any((t < 0) | (t > self.T)):
            raise ValueError(f"query points must lie in [0, {self.T}]")
        return np.interp(t, self.nodes_, values)


class FractionalPLaplacianSolver(_ProblemEstimator):
    """Find one negative-energy solution by Sobolev-preconditioned descent.

    ``fit`` ignores its data arguments; the problem is fully described by the
    hyper-parameters. After fitting, ``predict(t)`` interpolates the solution.
    """

    def __init__(self, alpha: float = 0.75, p: float = 2.0, T: float = 1.0, N: int = 256,
                 nonlinearity=None, max_iters: int = 5000, grad_tol: float = 1e-6):
        self.alpha = alpha
        self.p = p
        self.T = T
        self.N = N
        self.nonlinearity = nonlinearity
        self.max_iters = max_iters
        self.grad_tol = grad_tol

    def fit(self, X=None, y=None):
        config = self._config()
        ctx = config.problem.context()
        lo, hi = ctx.nl.interval if ctx.nl.interval is not None else (0.0, self.T)
        u0 = bump(ctx.grid, lo, hi)
        probe = scaling_probe(ctx, u0)
        res = minimize(ctx, GridFunction(ctx.grid, probe.s_star * u0), config.solver)
        self.nodes_ = ctx.grid.nodes
        self.solution_ = res.u.values
        self.energy_ = res.energy
        self.grad_norm_ = res.grad_norm_exact
        self.converged_ = res.converged
        self.n_iter_ = res.iters
        self.result_ = res
        return self

    def predict(self, t):
        check_is_fitted(self, "solution_")
        return self._interp(t, self.solution_)


class MultistartSolver(_ProblemEstimator):
    """Collect distinct critical points, up to sign, from genus-style seeds."""

    def __init__(self, alpha: float = 0.75, p: float = 2.0, T: float = 1.0, N: int = 256,
                 nonlinearity=None, n_seeds: int = 4, method: str = "auto",
                 max_iters: int = 5000, grad_tol: float = 1e-6, threads: int | None = None):
        self.alpha = alpha
        self.p = p
        self.T = T
        self.N = N
        self.nonlinearity = nonlinearity
        self.n_seeds = n_seeds
        self.method = method
        self.max_iters = max_iters
        self.grad_tol = grad_tol
        self.threads = threads

    def fit(self, X=None, y=None):
        config = self._config()
        ctx = config.problem.context()
        seeds = genus_seeds(ctx, self.n_seeds)
        found = multistart(ctx, seeds, config.solver, method=self.method, threads=self.threads)
        self.nodes_ = ctx.grid.nodes
        self.results_ = found
        self.solutions_ = np.array([r.u.values for r in found]).reshape(len(found), -1)
        self.energies_ = np.array([r.energy for r in found])
        self.grad_norms_ = np.array([r.grad_norm_exact for r in found])
        return self

    def predict(self, t):
        """Interpolated solutions, shape ``(n_solutions, len(t))``."""
        check_is_fitted(self, "solutions_")
        return np.array([self._interp(t, u) for u in self.solutions_])


__all__ = ["FractionalDerivative", "FractionalPLaplacianSolver", "MultistartSolver",
           "check_grid_values"]
