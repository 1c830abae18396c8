"""Critical-point search for the discrete energy.

``minimize`` is Armijo backtracking descent (Sobolev-preconditioned by
default). Descent only reaches local minima, and sign-changing critical
points are saddles, so ``multistart`` refines sign-changing seeds with a
Jacobian-free Newton-Krylov solve of the preconditioned gradient instead.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import BSpline
from scipy.optimize import root

from .energy import EnergyContext
from .grid import Grid, GridFunction, linf_norm, lp_norm
from .space import embedding_constants

MIN_BUMP_CELLS = 4
UNBOUNDED = 1e6


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 5000
    grad_tol: float = 1e-6
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    initial_step: float = 1.0
    dedup_tol: float = 1e-2
    preconditioner: str = "sobolev"
    zero_tol: float = 1e-8
    newton_maxiter: int = 200

    def __post_init__(self):
        for name in ("max_iters", "grad_tol", "armijo_c", "backtrack_factor",
                     "initial_step", "dedup_tol", "newton_maxiter"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.armijo_c < 0.5:
            raise ValueError("armijo_c must be below 0.5")
        if not self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must be below 1")
        if self.preconditioner not in ("sobolev", "none"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")


@dataclass
class SolveResult:
    u: GridFunction
    energy: float
    grad_norm: float
    iters: int
    converged: bool
    trace: list = field(default_factory=list)
    grad_norm_exact: float = float("nan")
    method: str = "descent"
    status: str = ""
    seed_index: int | None = None
    mirror_energy: float | None = None

    @property
    def nontrivial(self) -> bool:
        return linf_norm(self.u) > 0

    def summary(self) -> dict:
        return {
            "seed_index": self.seed_index, "method": self.method, "status": self.status,
            "energy": self.energy, "mirror_energy": self.mirror_energy,
            "grad_norm": self.grad_norm, "grad_norm_exact": self.grad_norm_exact,
            "iters": self.iters, "converged": self.converged, "linf": linf_norm(self.u),
        }


def _direction(ctx: EnergyContext, g: np.ndarray, opts: SolveOptions) -> np.ndarray:
    if opts.preconditioner == "sobolev":
        return ctx.precondition(g)
    return g / ctx.grid.h


def minimize(ctx: EnergyContext, u0, opts: SolveOptions = SolveOptions(), *,
             callback=None) -> SolveResult:
    """Armijo descent from ``u0`` until the gradient norm drops below ``grad_tol``.

    ``callback(k, u)`` is called with a copy of every iterate.
    """
    u = (u0.values if isinstance(u0, GridFunction) else np.asarray(u0, dtype=float)).copy()
    if u.shape != (ctx.grid.size,) or u[0] != 0 or u[-1] != 0:
        raise ValueError("u0 must be a zero-boundary grid function on the context grid")
    e = ctx.value(u)
    g = ctx.grad(u)
    gn = ctx.grad_norm(g)
    trace = [(0, e, gn, float(np.abs(u).max()))]
    if callback is not None:
        callback(0, u.copy())
    status = "max_iters"
    k = 0
    while True:
        if gn <= opts.grad_tol:
            status = "converged"
            break
        if k >= opts.max_iters:
            break
        d = _direction(ctx, g, opts)
        slope = float(g @ d)
        step = opts.initial_step
        while True:
            trial = u - step * d
            et = ctx.value(trial)
            if et <= e - opts.armijo_c * step * slope and et < e:
                break
            step *= opts.backtrack_factor
            if step < 1e-16:
                status = "stalled"
                break
        if status == "stalled":
            break
        k += 1
        u, e = trial, et
        g = ctx.grad(u)
        gn = ctx.grad_norm(g)
        trace.append((k, e, gn, float(np.abs(u).max())))
        if callback is not None:
            callback(k, u.copy())
    return SolveResult(
        u=GridFunction(ctx.grid, u), energy=e, grad_norm=gn, iters=k,
        converged=status == "converged", trace=trace,
        grad_norm_exact=ctx.grad_norm(ctx.grad(u, eps=0.0)), status=status,
    )


def critical_point(ctx: EnergyContext, u0, opts: SolveOptions = SolveOptions()) -> SolveResult:
    """Newton-Krylov solve of ``K^-1 grad I(u) = 0`` started at ``u0``.

    Converges to whichever critical point is nearby, saddles included.
    Only gradient evaluations are used (finite-difference Krylov products).
    """
    u0 = u0.values if isinstance(u0, GridFunction) else np.asarray(u0, dtype=float)
    n = ctx.grid.size

    def residual(x):
        u = np.zeros(n)
        u[1:-1] = x
        return ctx.precondition(ctx.grad(u))[1:-1]

    e0 = ctx.value(u0)
    g0 = ctx.grad_norm(ctx.grad(u0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            sol = root(residual, u0[1:-1], method="krylov",
                       options={"fatol": 1e-14, "maxiter": opts.newton_maxiter})
            x, nit = sol.x, int(getattr(sol, "nit", 0))
        except (ValueError, np.linalg.LinAlgError, FloatingPointError):
            x, nit = u0[1:-1], 0
    u = np.zeros(n)
    if np.all(np.isfinite(x)):
        u[1:-1] = x
    e = ctx.value(u)
    g = ctx.grad(u)
    gn = ctx.grad_norm(g)
    ok = bool(gn <= opts.grad_tol)
    return SolveResult(
        u=GridFunction(ctx.grid, u), energy=e, grad_norm=gn, iters=nit, converged=ok,
        trace=[(0, e0, g0, float(np.abs(u0).max())), (nit, e, gn, float(np.abs(u).max()))],
        grad_norm_exact=ctx.grad_norm(ctx.grad(u, eps=0.0)), method="newton_krylov",
        status="converged" if ok else "not_converged",
    )


# scaling probe -----------------------------------------------------------


@dataclass
class ScalingCurve:
    s: np.ndarray
    values: np.ndarray
    s_star: float
    min_value: float
    negative_found: bool


def default_s_grid() -> np.ndarray:
    return np.geomspace(1e-4, 1e2, 121)


def scaling_probe(ctx: EnergyContext, u0, s_grid=None) -> ScalingCurve:
    """Energy along the ray ``s -> I(s u0)``; ``u0`` is rescaled to unit max norm.

    ``s_star`` minimizes the curve over grid values ``s <= delta``.
    """
    vals = u0.values if isinstance(u0, GridFunction) else np.asarray(u0, dtype=float)
    top = np.abs(vals).max(initial=0.0)
    if top == 0:
        raise ValueError("scaling probe needs a nonzero direction")
    vals = vals / top
    nl = ctx.nl
    if nl.interval is not None:
        lo, hi = nl.interval
        outside = (ctx.grid.nodes <= lo) | (ctx.grid.nodes >= hi)
        if np.any(np.abs(vals[outside]) > 0) and (lo > 0 or hi < ctx.grid.T):
            raise ValueError("u0 must be supported inside interval_I")
    s = default_s_grid() if s_grid is None else np.sort(np.asarray(s_grid, dtype=float))
    if np.any(s <= 0):
        raise ValueError("s_grid must be positive")
    curve = np.array([ctx.value(si * vals) for si in s])
    delta = nl.delta if nl.delta is not None else np.inf
    window = s <= delta
    if not window.any():
        window = s == s.min()
    k = int(np.argmin(np.where(window, curve, np.inf)))
    return ScalingCurve(s, curve, float(s[k]), float(curve[k]), bool(curve[window].min() < 0))


# genus seeds ---------------------------------------------------------------


def bump(grid: Grid, lo: float, hi: float) -> np.ndarray:
    """Cubic B-spline profile supported on ``(lo, hi)``, peak value 1."""
    basis = BSpline.basis_element(np.linspace(lo, hi, 5), extrapolate=False)
    vals = np.nan_to_num(basis(grid.nodes))
    vals[(grid.nodes <= lo) | (grid.nodes >= hi)] = 0.0
    vals[0] = vals[-1] = 0.0
    return vals / vals.max()


def default_sigma(ctx: EnergyContext, first_bump: np.ndarray) -> float:
    """Probe-optimal scale for a bump normalized to ``||L u||_Lp = 1``.

    The probe works with unit max norm, so its ``s_star`` is converted:
    ``sigma * first_bump == s_star * first_bump / max|first_bump|``.
    """
    probe = scaling_probe(ctx, first_bump)
    sigma = float(probe.s_star / np.abs(first_bump).max())
    c_inf = embedding_constants(ctx.alpha, ctx.p, ctx.grid.T).c_inf
    if ctx.nl.delta is not None and c_inf is not None:
        sigma = min(sigma, ctx.nl.delta / c_inf)
    return sigma


def genus_seeds(ctx: EnergyContext, n: int, sigma: float | None = None, *,
                return_bumps: bool = False):
    """Starting points built from ``n`` bumps on disjoint subintervals of I.

    Each bump is normalized to ``||L u_i||_Lp = 1`` and scaled by ``sigma``.
    The seeds are ``+u_i``, ``-u_i`` and, for every contiguous run
    ``i < j``, the alternating combination ``u_i - u_{i+1} + ... +- u_j``:
    ``2n + n(n-1)/2`` in total.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    grid = ctx.grid
    lo, hi = ctx.nl.interval if ctx.nl.interval is not None else (0.0, grid.T)
    width = (hi - lo) / n
    if width < MIN_BUMP_CELLS * grid.h:
        raise ValueError(f"interval_I too short for {n} bumps of >= {MIN_BUMP_CELLS} cells")
    bumps = []
    for i in range(n):
        b = bump(grid, lo + i * width, lo + (i + 1) * width)
        if np.count_nonzero(b) == 0:
            raise ValueError("bump support contains no grid nodes")
        bumps.append(b / lp_norm(ctx.left_op.matrix @ b, ctx.p, grid))
    if sigma is None:
        sigma = default_sigma(ctx, bumps[0])
    seeds = [sigma * b for b in bumps] + [-sigma * b for b in bumps]
    for i in range(n):
        for j in range(i + 1, n):
            combo = sum((-1) ** (k - i) * bumps[k] for k in range(i, j + 1))
            seeds.append(sigma * combo)
    seeds = [GridFunction(grid, s) for s in seeds]
    if return_bumps:
        return seeds, [GridFunction(grid, b) for b in bumps], sigma
    return seeds


# multistart ------------------------------------------------------------------


def _threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("FRACPLAP_THREADS")
    return max(1, int(env)) if env else 1


def _sign_changes(vals: np.ndarray) -> bool:
    nz = vals[vals != 0]
    return bool(nz.size and nz.min() < 0 < nz.max())


def relative_distance(u: np.ndarray, v: np.ndarray) -> float:
    scale = max(np.abs(u).max(), np.abs(v).max())
    if scale == 0:
        return 0.0
    return float(np.abs(u - v).max() / scale)


def pair_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Relative max-norm distance between ``u`` and ``v`` up to sign."""
    return min(relative_distance(u, v), relative_distance(u, -v))


def multistart(ctx: EnergyContext, seeds: Sequence, opts: SolveOptions = SolveOptions(), *,
               method: str = "auto", threads: int | None = None) -> list[SolveResult]:
    """Search from every seed, keep converged runs and merge duplicates.

    ``method="auto"`` descends from sign-definite seeds and runs
    :func:`critical_point` from sign-changing ones. Solutions closer than
    ``dedup_tol`` (relative max norm, up to sign) are merged, keeping the
    lowest seed index. Output is sorted by energy.
    """
    if method not in ("auto", "descent", "newton_krylov"):
        raise ValueError(f"unknown method {method!r}")
    seeds = [s.values if isinstance(s, GridFunction) else np.asarray(s, dtype=float) for s in seeds]

    def run_one(item):
        idx, s = item
        use_newton = method == "newton_krylov" or (method == "auto" and _sign_changes(s))
        res = critical_point(ctx, s, opts) if use_newton else minimize(ctx, s, opts)
        res.seed_index = idx
        res.mirror_energy = ctx.value(-res.u.values)
        return res

    items = list(enumerate(seeds))
    nthreads = _threads(threads)
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as pool:
            results = list(pool.map(run_one, items))
    else:
        results = [run_one(it) for it in items]

    kept: list[SolveResult] = []
    for res in sorted((r for r in results if r.converged), key=lambda r: r.seed_index):
        u = res.u.values
        dup = False
        for other in kept:
            v = other.u.values
            both_zero = np.abs(u).max() <= opts.zero_tol and np.abs(v).max() <= opts.zero_tol
            if both_zero or pair_distance(u, v) < opts.dedup_tol:
                dup = True
                break
        if not dup:
            kept.append(res)
    kept.sort(key=lambda r: (r.energy, r.seed_index))
    return kept


# run diagnostics ---------------------------------------------------------------


@dataclass
class PSReport:
    iterates_bounded: bool
    grad_to_zero_but_no_convergence: bool
    energy_oscillating: bool
    stalled: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def ps_diagnostic(trace, *, bound: float = UNBOUNDED, window: int = 5) -> PSReport:
    """Heuristic run-health flags from a ``(iter, energy, grad_norm, linf)`` trace.

    ``grad_to_zero_but_no_convergence`` marks the Palais-Smale failure
    pattern: gradients shrinking while the iterates keep growing.
    """
    if not len(trace):
        raise ValueError("empty trace")
    arr = np.array([tuple(row)[:4] for row in trace], dtype=float)
    energies, grads, norms = arr[:, 1], arr[:, 2], arr[:, 3]
    bounded = bool(np.all(np.isfinite(norms)) and norms.max() <= bound)
    rises = np.diff(energies) > 1e-12 * np.maximum(1.0, np.abs(energies[:-1]))
    oscillating = bool(rises.any())
    tail = slice(max(0, len(arr) - window), len(arr))
    stalled = False
    ps_fail = False
    if len(arr) > window:
        e_tail, g_tail, n_tail = energies[tail], grads[tail], norms[tail]
        flat = np.ptp(e_tail) <= 1e-14 * max(1.0, abs(e_tail[-1]))
        stalled = bool(flat and g_tail[-1] >= 0.5 * g_tail[0] and g_tail[-1] > 0)
        half = len(arr) // 2
        shrinking = grads[-1] < 1e-2 * grads[0]
        growing = norms[-1] > 1.1 * norms[half] and np.all(np.diff(n_tail) > 0)
        ps_fail = bool(shrinking and growing)
    return PSReport(bounded, ps_fail, oscillating, stalled)
