"""Nonlinearities f(t, x), their primitives F(t, x) and sampled hypothesis checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import integrate as _quad

from .grid import Grid

SLACK = 1e-10
N_MAGNITUDES = 64

POWER_FAMILIES = ("power_odd", "sign_changing_power")
FAMILIES = POWER_FAMILIES + ("custom",)


class ConfigurationError(ValueError):
    """Raised when a check needs constants the nonlinearity does not carry."""


class NumericalFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class Coefficient:
    """A continuous coefficient on ``[0, T]``: constant or piecewise-linear samples."""

    T: float
    value: float | None = None
    samples: tuple[float, ...] | None = None

    def __post_init__(self):
        if (self.value is None) == (self.samples is None):
            raise ValueError("give exactly one of value or samples")
        if self.samples is not None:
            if len(self.samples) < 2:
                raise ValueError("need at least two coefficient samples")
            if not all(math.isfinite(s) for s in self.samples):
                raise ValueError("coefficient samples must be finite")
        elif not math.isfinite(self.value):
            raise ValueError("coefficient value must be finite")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.value is not None:
            return np.full(t.shape, float(self.value))
        knots = np.linspace(0.0, self.T, len(self.samples))
        return np.interp(t, knots, np.asarray(self.samples))

    def abs(self) -> "Coefficient":
        if self.value is not None:
            return Coefficient(self.T, value=abs(self.value))
        # |b| of a piecewise-linear b is not piecewise linear on the same
        # knots, so resample finely enough to keep kinks within one cell
        n = max(len(self.samples), 2) * 16 + 1
        t = np.linspace(0.0, self.T, n)
        return Coefficient(self.T, samples=tuple(np.abs(self(t)).tolist()))

    def to_dict(self) -> dict:
        if self.value is not None:
            return {"kind": "constant", "value": self.value}
        return {"kind": "samples", "values": list(self.samples)}

    @classmethod
    def from_dict(cls, spec, T: float) -> "Coefficient":
        if isinstance(spec, (int, float)):
            return cls(T, value=float(spec))
        kind = spec.get("kind")
        if kind == "constant":
            return cls(T, value=float(spec["value"]))
        if kind == "samples":
            return cls(T, samples=tuple(float(v) for v in spec["values"]))
        raise ValueError(f"unknown coefficient kind {kind!r}")


class _Table:
    """Piecewise-linear f(x) (optionally per t-row) with exact primitive from 0."""

    def __init__(self, x, f, t=None):
        self.x = np.asarray(x, dtype=float)
        f = np.asarray(f, dtype=float)
        if self.x.ndim != 1 or len(self.x) < 2 or np.any(np.diff(self.x) <= 0):
            raise ValueError("table x must be strictly increasing with >= 2 entries")
        if t is None:
            f = f[None, :]
            self.t = None
        else:
            self.t = np.asarray(t, dtype=float)
            if np.any(np.diff(self.t) <= 0):
                raise ValueError("table t must be strictly increasing")
        if f.shape[-1] != len(self.x) or (self.t is not None and f.shape[0] != len(self.t)):
            raise ValueError("table f shape does not match x/t")
        self.f = f
        dx = np.diff(self.x)
        self.cum = np.concatenate(
            [np.zeros((f.shape[0], 1)), np.cumsum(0.5 * dx * (f[:, 1:] + f[:, :-1]), axis=1)],
            axis=1,
        )
        self.cum0 = self._row_primitive(np.zeros(1))[:, 0]

    def _locate(self, x):
        j = np.clip(np.searchsorted(self.x, x, side="right") - 1, 0, len(self.x) - 2)
        return j, x - self.x[j]

    def _row_values(self, x):
        j, d = self._locate(x)
        slope = (self.f[:, j + 1] - self.f[:, j]) / (self.x[j + 1] - self.x[j])
        return self.f[:, j] + slope * d

    def _row_primitive(self, x):
        j, d = self._locate(x)
        slope = (self.f[:, j + 1] - self.f[:, j]) / (self.x[j + 1] - self.x[j])
        return self.cum[:, j] + self.f[:, j] * d + 0.5 * slope * d * d

    def _blend(self, rows, t):
        if self.t is None:
            return rows[0]
        out = np.empty(rows.shape[1])
        for k in range(rows.shape[1]):
            out[k] = np.interp(t[k], self.t, rows[:, k])
        return out

    def f_of(self, t, x):
        t, x = np.broadcast_arrays(np.atleast_1d(t), np.atleast_1d(x))
        return self._blend(self._row_values(x.ravel()), t.ravel()).reshape(x.shape)

    def F_of(self, t, x):
        t, x = np.broadcast_arrays(np.atleast_1d(t), np.atleast_1d(x))
        rows = self._row_primitive(x.ravel()) - self.cum0[:, None]
        return self._blend(rows, t.ravel()).reshape(x.shape)


@dataclass(frozen=True)
class Nonlinearity:
    """Right-hand side ``f(t, x)`` together with the constants of the hypotheses.

    Power families use ``f = r b(t) |x|^(r-2) x`` and ``F = b(t) |x|^r``.
    """

    family: str
    T: float
    r: float | None = None
    b: Coefficient | None = None
    a: Coefficient | None = None
    eta: float | None = None
    delta: float | None = None
    interval: tuple[float, float] | None = None
    r1: float | None = None
    r2: float | None = None
    f_fn: Callable | None = field(default=None, compare=False, repr=False)
    F_fn: Callable | None = field(default=None, compare=False, repr=False)
    table: dict | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.family in POWER_FAMILIES:
            if self.r is None or not self.r > 1:
                raise ValueError(f"power families need r > 1, got {self.r}")
            if self.b is None:
                raise ValueError("power families need a coefficient b")
        elif self.f_fn is None and self.table is None:
            raise ValueError("custom family needs f_fn or a table")
        if self.interval is not None:
            lo, hi = self.interval
            if not 0 <= lo < hi <= self.T:
                raise ValueError(f"interval {self.interval} must be a nonempty subinterval of [0, {self.T}]")
        for name in ("eta", "delta"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if self.table is not None and self.f_fn is None:
            tab = _Table(self.table["x"], self.table["f"], self.table.get("t"))
            object.__setattr__(self, "f_fn", tab.f_of)
            object.__setattr__(self, "F_fn", tab.F_of)

    # constructors -------------------------------------------------------

    @classmethod
    def power(cls, r: float, b=1.0, *, T: float = 1.0, family: str = "power_odd", **kw) -> "Nonlinearity":
        if not isinstance(b, Coefficient):
            b = Coefficient(T, value=float(b)) if np.isscalar(b) else Coefficient(T, samples=tuple(map(float, b)))
        nl = cls(family, T, r=float(r), b=b, **kw)
        return nl.with_defaults()

    @classmethod
    def custom(cls, f: Callable, F: Callable | None = None, *, T: float = 1.0, **kw) -> "Nonlinearity":
        return cls("custom", T, f_fn=f, F_fn=F, **kw)

    def with_defaults(self) -> "Nonlinearity":
        """Fill hypothesis constants implied by the power form where unset."""
        if self.family not in POWER_FAMILIES:
            return self
        upd = {}
        if self.interval is None:
            upd["interval"] = (0.0, self.T)
        interval = upd.get("interval", self.interval)
        if self.a is None:
            upd["a"] = self.b.abs()
        if self.r1 is None:
            upd["r1"] = self.r
        if self.r2 is None:
            upd["r2"] = self.r
        if self.delta is None:
            upd["delta"] = 1.0
        if self.eta is None:
            bmin = float(self.b(interval_samples(interval)).min())
            if bmin > 0:
                upd["eta"] = bmin
        return replace(self, **upd) if upd else self

    @property
    def is_power(self) -> bool:
        return self.family in POWER_FAMILIES

    def to_dict(self) -> dict:
        if self.family == "custom":
            if self.table is None:
                raise TypeError("callable custom nonlinearities are not serializable")
            out = {"family": "custom", "table": self.table}
        else:
            out = {"family": self.family, "r": self.r, "b": self.b.to_dict()}
        if self.a is not None:
            out["a"] = self.a.to_dict()
        for key in ("eta", "delta", "r1", "r2"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        if self.interval is not None:
            out["interval"] = list(self.interval)
        return out

    @classmethod
    def from_dict(cls, spec: dict, T: float) -> "Nonlinearity":
        spec = dict(spec)
        family = spec.pop("family", "power_odd")
        kw = {}
        if "a" in spec:
            kw["a"] = Coefficient.from_dict(spec.pop("a"), T)
        if "interval" in spec:
            kw["interval"] = tuple(float(v) for v in spec.pop("interval"))
        for key in ("eta", "delta", "r1", "r2"):
            if key in spec and spec[key] is not None:
                kw[key] = float(spec.pop(key))
            else:
                spec.pop(key, None)
        if family == "custom":
            table = spec.pop("table", None)
            if table is None:
                raise ValueError("custom family in a config needs a 'table'")
            nl = cls("custom", T, table=table, **kw)
        else:
            b = Coefficient.from_dict(spec.pop("b", {"kind": "constant", "value": 1.0}), T)
            nl = cls(family, T, r=float(spec.pop("r")), b=b, **kw).with_defaults()
        if spec:
            raise ValueError(f"unknown nonlinearity keys: {sorted(spec)}")
        return nl


def interval_samples(interval, count: int = 129) -> np.ndarray:
    lo, hi = interval
    return np.linspace(lo, hi, count + 2)[1:-1]


def _check_t(nl: Nonlinearity, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-12 * nl.T) or np.any(t > nl.T * (1 + 1e-12)):
        raise ValueError(f"t outside [0, {nl.T}]")
    return t


def _signed_power(x, e):
    # |x|^e * sign(x) with value 0 at x = 0 (e > 0)
    return np.sign(x) * np.abs(x) ** e


def f_eval(nl: Nonlinearity, t, x):
    t = _check_t(nl, t)
    x = np.asarray(x, dtype=float)
    if nl.is_power:
        return nl.r * nl.b(t) * _signed_power(x, nl.r - 1.0)
    out = nl.f_fn(t, x)
    return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(t, x).shape).copy()


def F_eval(nl: Nonlinearity, t, x):
    t = _check_t(nl, t)
    x = np.asarray(x, dtype=float)
    if nl.is_power:
        return nl.b(t) * np.abs(x) ** nl.r
    if nl.F_fn is not None:
        return np.asarray(nl.F_fn(t, x), dtype=float)
    tt, xx = np.broadcast_arrays(t, x)
    out = np.empty(tt.shape)
    for idx in np.ndindex(tt.shape):
        ti = float(tt[idx])
        val, err = _quad.quad(lambda s: float(nl.f_fn(ti, s)), 0.0, float(xx[idx]),
                              epsabs=1e-10, epsrel=1e-10, limit=200)
        if not np.isfinite(val) or err > 1e-8:
            raise NumericalFailure(f"primitive quadrature failed at t={ti}, x={xx[idx]}")
        out[idx] = val
    return out if out.shape else float(out)


# hypothesis checks ------------------------------------------------------


@dataclass
class HypothesisReport:
    h1_pass: bool | None = None
    h2_pass: bool | None = None
    h2prime_pass: bool | None = None
    h3_pass: bool | None = None
    h4_pass: bool | None = None
    witnesses: dict = field(default_factory=dict)
    samples: int = 0

    def merge(self, other: "HypothesisReport") -> "HypothesisReport":
        out = HypothesisReport(witnesses={**self.witnesses, **other.witnesses},
                               samples=self.samples + other.samples)
        for name in ("h1_pass", "h2_pass", "h2prime_pass", "h3_pass", "h4_pass"):
            v = getattr(other, name)
            setattr(out, name, getattr(self, name) if v is None else v)
        return out

    __or__ = merge

    def failed(self) -> list[str]:
        names = {"h1_pass": "H1", "h2_pass": "H2", "h2prime_pass": "H2'",
                 "h3_pass": "H3", "h4_pass": "H4"}
        return [label for attr, label in names.items() if getattr(self, attr) is False]


def _magnitudes(xmax: float) -> np.ndarray:
    return np.geomspace(xmax * 1e-6, xmax, N_MAGNITUDES)


def _x_samples(x_range) -> np.ndarray:
    lo, hi = x_range
    xs = [0.0]
    if hi > 0:
        xs.extend(_magnitudes(hi))
    if lo < 0:
        xs.extend(-_magnitudes(-lo))
    return np.array(xs)


def default_x_range(nl: Nonlinearity) -> tuple[float, float]:
    d = max(nl.delta or 1.0, 1.0)
    return (-10.0 * d, 10.0 * d)


def _witness(mask, violation, T_, X_, **extra):
    k = int(np.argmax(np.where(mask, violation, -np.inf)))
    return {"t": float(T_.flat[k]), "x": float(X_.flat[k]),
            "violation": float(violation.flat[k]), **extra}


def _exponent_failure(name, value, p):
    ok = value is not None and 1 < value and (p is None or value < p)
    if ok:
        return None
    return {"reason": f"exponent {name}={value} not in (1, p={p})"}


def check_h1(nl: Nonlinearity, grid: Grid, x_range=None, *, p: float | None = None) -> HypothesisReport:
    """Growth bound ``|f(t,x)| <= r1 a(t) |x|^(r1-1)`` on grid x magnitudes."""
    if nl.a is None or nl.r1 is None:
        raise ConfigurationError("H1 needs the envelope a(t) and exponent r1")
    bad = _exponent_failure("r1", nl.r1, p)
    if bad:
        return HypothesisReport(h1_pass=False, witnesses={"H1": bad})
    x_range = default_x_range(nl) if x_range is None else x_range
    T_, X_ = np.meshgrid(grid.nodes, _x_samples(x_range), indexing="ij")
    a_vals = nl.a(T_)
    if np.any(a_vals < -SLACK):
        k = int(np.argmin(a_vals))
        return HypothesisReport(h1_pass=False, samples=T_.size, witnesses={
            "H1": {"t": float(T_.flat[k]), "x": None, "reason": "a(t) < 0"}})
    lhs = np.abs(f_eval(nl, T_, X_))
    rhs = nl.r1 * a_vals * np.abs(X_) ** (nl.r1 - 1.0)
    viol = lhs - rhs
    mask = viol > SLACK
    rep = HypothesisReport(h1_pass=not mask.any(), samples=T_.size)
    if mask.any():
        rep.witnesses["H1"] = _witness(mask, viol, T_, X_)
    return rep


def _local_samples(nl: Nonlinearity, grid: Grid | None):
    if nl.interval is None or nl.delta is None:
        raise ConfigurationError("needs interval_I and delta")
    lo, hi = nl.interval
    if grid is not None:
        ts = grid.nodes[(grid.nodes > lo) & (grid.nodes < hi)]
        if ts.size == 0:
            ts = interval_samples(nl.interval, 9)
    else:
        ts = interval_samples(nl.interval)
    return np.meshgrid(ts, _x_samples((-nl.delta, nl.delta)), indexing="ij")


def check_h2(nl: Nonlinearity, grid: Grid | None = None, *, p: float | None = None) -> HypothesisReport:
    """Local lower bound ``F(t,x) >= eta |x|^r2`` on ``I x [-delta, delta]``."""
    if nl.eta is None or nl.r2 is None:
        raise ConfigurationError("H2 needs eta, delta, r2 and interval_I")
    bad = _exponent_failure("r2", nl.r2, p)
    if bad:
        return HypothesisReport(h2_pass=False, witnesses={"H2": bad})
    T_, X_ = _local_samples(nl, grid)
    viol = nl.eta * np.abs(X_) ** nl.r2 - F_eval(nl, T_, X_)
    mask = viol > SLACK
    rep = HypothesisReport(h2_pass=not mask.any(), samples=T_.size)
    if mask.any():
        rep.witnesses["H2"] = _witness(mask, viol, T_, X_)
    return rep


def check_h2prime(nl: Nonlinearity, grid: Grid | None = None, *, p: float | None = None) -> HypothesisReport:
    """Local bound ``f(t,x) x >= r eta |x|^r`` with ``r = r2``."""
    if nl.eta is None or nl.r2 is None:
        raise ConfigurationError("H2' needs eta, delta, r2 and interval_I")
    bad = _exponent_failure("r2", nl.r2, p)
    if bad:
        return HypothesisReport(h2prime_pass=False, witnesses={"H2'": bad})
    T_, X_ = _local_samples(nl, grid)
    r = nl.r2
    viol = r * nl.eta * np.abs(X_) ** r - f_eval(nl, T_, X_) * X_
    mask = viol > SLACK
    rep = HypothesisReport(h2prime_pass=not mask.any(), samples=T_.size)
    if mask.any():
        rep.witnesses["H2'"] = _witness(mask, viol, T_, X_)
    return rep


def check_h3(nl: Nonlinearity, grid: Grid, x_range=None) -> HypothesisReport:
    """Oddness ``f(t,-x) = -f(t,x)``."""
    x_range = default_x_range(nl) if x_range is None else x_range
    T_, X_ = np.meshgrid(grid.nodes, _x_samples(x_range), indexing="ij")
    viol = np.abs(f_eval(nl, T_, X_) + f_eval(nl, T_, -X_))
    mask = viol > SLACK
    rep = HypothesisReport(h3_pass=not mask.any(), samples=T_.size)
    if mask.any():
        rep.witnesses["H3"] = _witness(mask, viol, T_, X_)
    return rep


def check_h4(nl: Nonlinearity, grid: Grid | None = None, *, p: float | None = None) -> HypothesisReport:
    """Power form ``f = r b(t) |x|^(r-2) x`` with ``1 < r < p`` and ``b > 0`` on I."""
    if not nl.is_power:
        return HypothesisReport(h4_pass=False, witnesses={"H4": {"reason": "f is not of power form"}})
    bad = _exponent_failure("r", nl.r, p)
    if bad:
        return HypothesisReport(h4_pass=False, witnesses={"H4": bad})
    if nl.interval is None:
        raise ConfigurationError("H4 needs interval_I")
    lo, hi = nl.interval
    ts = interval_samples(nl.interval)
    if grid is not None:
        ts = np.union1d(ts, grid.nodes[(grid.nodes > lo) & (grid.nodes < hi)])
    bvals = nl.b(ts)
    if np.all(bvals > 0):
        return HypothesisReport(h4_pass=True, samples=ts.size)
    k = int(np.argmin(bvals))
    return HypothesisReport(h4_pass=False, samples=ts.size, witnesses={
        "H4": {"t": float(ts[k]), "x": None, "violation": float(-bvals[k]),
               "reason": "b(t) <= 0 inside interval_I"}})
