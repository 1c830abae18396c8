"""Embedding constants of the fractional derivative space and their checks."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np

from .fracops import FracOperator, Kind, apply
from .grid import GridFunction, linf_norm, lp_norm


@dataclass(frozen=True)
class EmbeddingConstants:
    alpha: float
    p: float
    T: float
    q: float
    c_p: float
    c_inf: float | None


def embedding_constants(alpha: float, p: float, T: float) -> EmbeddingConstants:
    """Constants bounding ``||u||_Lp`` and ``||u||_inf`` by ``||D^alpha u||_Lp``.

    ``c_inf`` is None unless ``alpha > 1/p``.
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    q = p / (p - 1.0)
    c_p = T**alpha / math.gamma(alpha + 1.0)
    c_inf = None
    if alpha > 1.0 / p:
        c_inf = T ** (alpha - 1.0 / p) / (
            math.gamma(alpha) * (alpha * q - q + 1.0) ** (1.0 / q)
        )
    return EmbeddingConstants(float(alpha), float(p), float(T), q, c_p, c_inf)


@dataclass
class EmbeddingReport:
    ratio_p: float | None
    ratio_inf: float | None
    tol: float
    passed: bool
    trivial: bool = False


def verify_embedding(u: GridFunction, consts: EmbeddingConstants, op: FracOperator) -> EmbeddingReport:
    if op.kind is not Kind.LEFT_DERIVATIVE:
        raise ValueError("embedding is checked against the left derivative")
    grid = op.grid
    if abs(grid.T - consts.T) > 1e-12 * consts.T or op.alpha != consts.alpha:
        raise ValueError("constants and operator disagree on T or alpha")
    tol = 10.0 * grid.h
    d_norm = lp_norm(apply(op, u), consts.p, grid)
    if d_norm == 0.0:
        return EmbeddingReport(None, None, tol, True, trivial=True)
    ratio_p = lp_norm(u, consts.p) / (consts.c_p * d_norm)
    ratio_inf = None
    if consts.c_inf is not None:
        ratio_inf = linf_norm(u) / (consts.c_inf * d_norm)
    ok = ratio_p <= 1 + tol and (ratio_inf is None or ratio_inf <= 1 + tol)
    return EmbeddingReport(ratio_p, ratio_inf, tol, bool(ok))


def full_norm(u: GridFunction, op: FracOperator, p: float) -> float:
    """Graph norm ``(||u||_p^p + ||D u||_p^p)^(1/p)``."""
    return (lp_norm(u, p) ** p + lp_norm(apply(op, u), p, op.grid) ** p) ** (1.0 / p)


def random_bumps(grid, count: int, rng: np.random.Generator, max_bumps: int = 3) -> list[GridFunction]:
    """Smooth zero-boundary samples: sums of a few random ``sin^2`` bumps."""
    t = grid.nodes / grid.T
    out = []
    for _ in range(count):
        vals = np.zeros(grid.size)
        for _ in range(rng.integers(1, max_bumps + 1)):
            lo = rng.uniform(0.0, 0.8)
            hi = rng.uniform(lo + 0.1, 1.0)
            x = (t - lo) / (hi - lo)
            inside = (x > 0) & (x < 1)
            vals += rng.normal() * np.where(inside, np.sin(np.pi * x) ** 2, 0.0)
        vals[0] = vals[-1] = 0.0
        out.append(GridFunction(grid, vals))
    return out


def embedding_sweep(samples: Iterable[GridFunction], consts: EmbeddingConstants,
                    op: FracOperator) -> dict:
    """Check every sample; returns the JSON-ready summary."""
    worst_p = 0.0
    worst_inf = 0.0
    n = 0
    ok = True
    for u in samples:
        rep = verify_embedding(u, consts, op)
        n += 1
        ok &= rep.passed
        if rep.ratio_p is not None:
            worst_p = max(worst_p, rep.ratio_p)
        if rep.ratio_inf is not None:
            worst_inf = max(worst_inf, rep.ratio_inf)
    out = asdict(consts)
    out.update(
        worst_ratio_p=worst_p,
        worst_ratio_inf=worst_inf if consts.c_inf is not None else None,
        samples=n,
        tol=10.0 * op.grid.h,
        **{"pass": bool(ok)},
    )
    return out
