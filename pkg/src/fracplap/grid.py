"""Uniform grids on [0, T], zero-boundary grid functions and trapezoid quadrature."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MIN_CELLS = 8


@dataclass(frozen=True)
class Grid:
    """Uniform partition of ``[0, T]`` into ``N`` cells."""

    T: float
    N: int
    h: float = field(init=False)
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not np.isfinite(self.T) or self.T <= 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if int(self.N) != self.N or self.N < MIN_CELLS:
            raise ValueError(f"N must be an integer >= {MIN_CELLS}, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "h", self.T / self.N)
        nodes = self.h * np.arange(self.N + 1)
        nodes[-1] = self.T
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @property
    def size(self) -> int:
        return self.N + 1

    @property
    def weights(self) -> np.ndarray:
        """Composite trapezoid weights ``(h/2, h, ..., h, h/2)``."""
        w = np.full(self.N + 1, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def interior(self) -> slice:
        return slice(1, self.N)


def make_grid(T: float, N: int) -> Grid:
    return Grid(T, N)


class GridFunction:
    """Node values of a function on ``grid`` vanishing at both endpoints.

    The values array is copied and frozen; arithmetic returns new instances.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values, *, atol: float = 0.0):
        arr = np.array(values, dtype=float)
        if arr.shape != (grid.size,):
            raise ValueError(f"expected {grid.size} node values, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid function values must be finite")
        if abs(arr[0]) > atol or abs(arr[-1]) > atol:
            raise ValueError(
                f"Dirichlet boundary violated: u(0)={arr[0]!r}, u(T)={arr[-1]!r}"
            )
        arr[0] = arr[-1] = 0.0
        arr.flags.writeable = False
        self.grid = grid
        self.values = arr

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "GridFunction":
        vals = np.asarray(fn(grid.nodes), dtype=float).copy()
        vals[0] = vals[-1] = 0.0
        return cls(grid, vals)

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.size))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __mul__(self, c):
        return GridFunction(self.grid, float(c) * self.values)

    __rmul__ = __mul__

    def __add__(self, other: "GridFunction"):
        _same_grid(self.grid, other.grid)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction"):
        _same_grid(self.grid, other.grid)
        return GridFunction(self.grid, self.values - other.values)

    def __repr__(self):
        return f"GridFunction(N={self.grid.N}, max={linf_norm(self):.3e})"


def _same_grid(a: Grid, b: Grid):
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


def _values(u) -> np.ndarray:
    return u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)


def integrate(g, grid: Grid) -> float:
    """Composite trapezoid rule for node values ``g`` on ``grid``."""
    g = np.asarray(g, dtype=float)
    if g.shape != (grid.size,):
        raise ValueError(f"expected {grid.size} node values, got shape {g.shape}")
    return float(grid.weights @ g)


def lp_norm(u, p: float, grid: Grid | None = None) -> float:
    if p <= 1:
        raise ValueError(f"p must exceed 1, got {p}")
    if grid is None:
        grid = u.grid
    v = np.abs(_values(u))
    scale = v.max(initial=0.0)
    if scale == 0.0:
        return 0.0
    # scaling avoids under/overflow in |u|^p
    return float(scale * integrate((v / scale) ** p, grid) ** (1.0 / p))


def linf_norm(u) -> float:
    return float(np.abs(_values(u)).max(initial=0.0))
