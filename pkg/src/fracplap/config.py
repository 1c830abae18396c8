"""Run configuration: JSON parsing, validation and echo."""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .energy import EnergyContext
from .problem import Nonlinearity
from .solver import SolveOptions

MODES = ("solve", "multistart", "verify", "embedding", "sweep")
THEOREMS = ("T1_1", "T1_2", "C3_5", "C3_6", "embedding", "coercivity")

TOP_KEYS = ("problem", "solver", "mode", "theorems", "n_required", "energy_margin",
            "sweep", "output_dir", "seed", "n_seeds", "embedding_samples", "coercivity_rays",
            "s_max")
PROBLEM_KEYS = ("alpha", "p", "T", "N", "nonlinearity")


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class ProblemConfig:
    alpha: float
    p: float
    T: float
    N: int
    nonlinearity: Nonlinearity

    def context(self, epsilon_reg: float | None = None) -> EnergyContext:
        return EnergyContext.build(self.alpha, self.p, self.nonlinearity, self.N, self.T, epsilon_reg)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "p": self.p, "T": self.T, "N": self.N,
                "nonlinearity": self.nonlinearity.to_dict()}


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemConfig
    solver: SolveOptions = SolveOptions()
    mode: str = "solve"
    theorems: tuple[str, ...] = ("T1_1", "T1_2")
    n_required: int = 3
    energy_margin: float = 1e-4
    sweep: dict = field(default_factory=dict)
    output_dir: str = "out"
    seed: int | None = None
    n_seeds: int = 4
    embedding_samples: int = 1000
    coercivity_rays: int = 20
    s_max: float = 100.0
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def to_dict(self) -> dict:
        return {
            "problem": self.problem.to_dict(),
            "solver": asdict(self.solver),
            "mode": self.mode,
            "theorems": list(self.theorems),
            "n_required": self.n_required,
            "energy_margin": self.energy_margin,
            "sweep": self.sweep,
            "output_dir": self.output_dir,
            "seed": self.seed,
            "n_seeds": self.n_seeds,
            "embedding_samples": self.embedding_samples,
            "coercivity_rays": self.coercivity_rays,
            "s_max": self.s_max,
        }


def _num(errors, where, value, kind=float):
    try:
        if isinstance(value, bool):
            raise TypeError
        out = kind(value)
        if kind is int and out != value:
            raise ValueError
        return out
    except (TypeError, ValueError):
        errors.append(f"{where}: expected {kind.__name__}, got {value!r}")
        return None


def _unknown(d: dict, accepted, where: str, notes: list):
    extra = sorted(set(d) - set(accepted))
    if extra:
        msg = f"{where}: ignoring unknown keys {extra}; accepted keys: {list(accepted)}"
        warnings.warn(msg, stacklevel=3)
        notes.append(msg)


def parse_problem(d: dict, errors: list, notes: list) -> ProblemConfig | None:
    if not isinstance(d, dict):
        errors.append("problem: expected an object")
        return None
    _unknown(d, PROBLEM_KEYS, "problem", notes)
    for key in ("alpha", "p", "N"):
        if key not in d:
            errors.append(f"problem.{key}: required")
    if errors:
        return None
    alpha = _num(errors, "problem.alpha", d["alpha"])
    p = _num(errors, "problem.p", d["p"])
    T = _num(errors, "problem.T", d.get("T", 1.0))
    N = _num(errors, "problem.N", d["N"], int)
    if errors:
        return None
    if not p > 1:
        errors.append(f"problem.p: p={p} must exceed 1")
    elif not 1.0 / p < alpha <= 1:
        errors.append(
            f"problem.alpha: alpha={alpha} violates the standing assumption alpha in (1/p, 1] "
            f"= ({1.0 / p:.6g}, 1]"
        )
    if not T > 0:
        errors.append(f"problem.T: T={T} must be positive")
    if N < 8:
        errors.append(f"problem.N: N={N} must be >= 8")
    spec = d.get("nonlinearity", {"family": "power_odd", "r": 1.5})
    nl = None
    try:
        nl = Nonlinearity.from_dict(spec, T)
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"problem.nonlinearity: {exc}")
    if nl is not None and nl.is_power and p is not None and not nl.r < p:
        notes.append(f"problem.nonlinearity.r: r={nl.r} is not below p={p}; sublinear hypotheses fail")
    if errors:
        return None
    return ProblemConfig(alpha, p, T, N, nl)


def parse_solver(d: dict, errors: list, notes: list) -> SolveOptions | None:
    if not isinstance(d, dict):
        errors.append("solver: expected an object")
        return None
    names = [f.name for f in fields(SolveOptions)]
    _unknown(d, names, "solver", notes)
    kw = {k: v for k, v in d.items() if k in names}
    try:
        return SolveOptions(**kw)
    except (TypeError, ValueError) as exc:
        errors.append(f"solver: {exc}")
        return None


def config_from_dict(raw: dict) -> RunConfig:
    errors: list[str] = []
    notes: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["top level: expected a JSON object"])
    _unknown(raw, TOP_KEYS, "config", notes)
    if "problem" not in raw:
        raise ConfigError(["problem: required"])
    problem = parse_problem(raw["problem"], errors, notes)
    solver = parse_solver(raw.get("solver", {}), errors, notes)
    mode = raw.get("mode", "solve")
    if mode not in MODES:
        errors.append(f"mode: {mode!r} not one of {list(MODES)}")
    theorems = raw.get("theorems", ["T1_1", "T1_2"])
    if not isinstance(theorems, list) or any(t not in THEOREMS for t in theorems):
        errors.append(f"theorems: expected a list drawn from {list(THEOREMS)}, got {theorems!r}")
        theorems = []
    kw = {}
    for key, kind in (("n_required", int), ("n_seeds", int), ("embedding_samples", int),
                      ("coercivity_rays", int), ("energy_margin", float), ("s_max", float)):
        if key in raw:
            val = _num(errors, key, raw[key], kind)
            if val is not None and not val > 0:
                errors.append(f"{key}: must be positive")
            kw[key] = val
    seed = raw.get("seed")
    if seed is not None:
        seed = _num(errors, "seed", seed, int)
    sweep = raw.get("sweep", {})
    if not isinstance(sweep, dict) or any(
        k not in ("alpha", "p", "r") or not isinstance(v, list) for k, v in sweep.items()
    ):
        errors.append("sweep: expected an object mapping alpha/p/r to lists")
    if errors:
        raise ConfigError(errors)
    return RunConfig(
        problem=problem, solver=solver, mode=mode, theorems=tuple(theorems),
        sweep=dict(sweep), output_dir=str(raw.get("output_dir", "out")), seed=seed,
        warnings=tuple(notes), **kw,
    )


def parse_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: malformed JSON ({exc})"]) from exc
    return config_from_dict(raw)
