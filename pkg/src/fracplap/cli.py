"""Command-line entry point: ``fracplap --config run.json [--mode m] [--out dir]``.

Exit codes: 0 success, 1 internal error, 2 a theorem check failed,
3 a theorem was refused because its hypotheses do not hold.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import io
from .config import ConfigError, RunConfig, config_from_dict, parse_config
from .fracops import dump_csv
from .grid import GridFunction
from .solver import bump, genus_seeds, minimize, multistart, scaling_probe
from .verify import run_theorems, verify_embedding_suite, verify_existence

log = logging.getLogger("fracplap")

EXIT_OK, EXIT_ERROR, EXIT_FAIL, EXIT_REFUSED = 0, 1, 2, 3


def _prepare(out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    return out


def _interval_bump(ctx):
    lo, hi = ctx.nl.interval if ctx.nl.interval is not None else (0.0, ctx.grid.T)
    return bump(ctx.grid, lo, hi)


def _run_solve(config: RunConfig, out: Path) -> int:
    ctx = config.problem.context()
    u0 = _interval_bump(ctx)
    probe = scaling_probe(ctx, u0)
    res = minimize(ctx, GridFunction(ctx.grid, probe.s_star * u0), config.solver)
    io.write_solutions(out / "solutions.csv", [res], ctx)
    io.write_curves(out / "curves.csv", probe, [res])
    io.write_json(out / "report.json", {"mode": "solve", "config_echo": config.to_dict(),
                                        "results": [res.summary()]})
    log.info("solve: energy=%.6e grad_norm=%.3e converged=%s", res.energy,
             res.grad_norm_exact, res.converged)
    return EXIT_OK if res.converged else EXIT_FAIL


def _run_multistart(config: RunConfig, out: Path) -> int:
    ctx = config.problem.context()
    seeds = genus_seeds(ctx, config.n_seeds)
    found = multistart(ctx, seeds, config.solver)
    io.write_solutions(out / "solutions.csv", found, ctx)
    io.write_curves(out / "curves.csv", None, found)
    io.write_json(out / "report.json", {"mode": "multistart", "config_echo": config.to_dict(),
                                        "n_seeds": len(seeds),
                                        "results": [r.summary() for r in found]})
    log.info("multistart: %d distinct solutions from %d seeds", len(found), len(seeds))
    return EXIT_OK if found else EXIT_FAIL


def _summary_row(rep):
    sols = rep.artifacts.get("solutions", [])
    energies = [r.energy for r in sols]
    grads = [r.grad_norm_exact for r in sols]
    return (rep.theorem_id, rep.passed, len(sols), min(energies) if energies else None,
            max(grads) if grads else None)


def _run_verify(config: RunConfig, out: Path) -> int:
    reports = run_theorems(config)
    solutions, ctx, probe = [], None, None
    for rep in reports:
        sols = rep.artifacts.get("solutions")
        if sols and len(sols) >= len(solutions):
            solutions, ctx = sols, rep.artifacts["ctx"]
        probe = probe or rep.artifacts.get("probe")
    if ctx is None:
        ctx = config.problem.context()
    io.write_solutions(out / "solutions.csv", solutions, ctx)
    io.write_curves(out / "curves.csv", probe, solutions)
    io.write_csv(out / "summary.csv",
                 ("theorem_id", "pass", "n_solutions", "best_energy", "worst_grad_norm"),
                 [_summary_row(r) for r in reports])
    io.write_json(out / "report.json", {"mode": "verify", "config_echo": config.to_dict(),
                                        "reports": [r.to_dict() for r in reports]})
    for rep in reports:
        state = "refused" if rep.refused else ("pass" if rep.passed else "FAIL")
        log.info("%s: %s", rep.theorem_id, state)
    if any(r.refused for r in reports):
        return EXIT_REFUSED
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def _run_embedding(config: RunConfig, out: Path) -> int:
    rep = verify_embedding_suite(config.problem, config.embedding_samples, config.seed or 0)
    io.write_json(out / "report.json", {"mode": "embedding", "config_echo": config.to_dict(),
                                        "embedding": rep})
    log.info("embedding: worst ratios p=%.4f inf=%s", rep["worst_ratio_p"], rep["worst_ratio_inf"])
    return EXIT_OK if rep["pass"] else EXIT_FAIL


def _run_sweep(config: RunConfig, out: Path) -> int:
    base = config.problem
    spec = base.nonlinearity.to_dict()
    axes = {
        "alpha": config.sweep.get("alpha", [base.alpha]),
        "p": config.sweep.get("p", [base.p]),
        "r": config.sweep.get("r", [spec.get("r")]),
    }
    rows, entries = [], []
    worst = EXIT_OK
    for alpha, p, r in itertools.product(axes["alpha"], axes["p"], axes["r"]):
        raw = config.to_dict()
        raw["problem"].update(alpha=alpha, p=p)
        if r is not None:
            raw["problem"]["nonlinearity"] = {**spec, "r": r, "r1": r, "r2": r}
        try:
            sub = config_from_dict(raw)
        except ConfigError as exc:
            rows.append((alpha, p, r, "invalid", None, None))
            entries.append({"alpha": alpha, "p": p, "r": r, "status": "invalid",
                            "errors": exc.errors})
            continue
        rep = verify_existence(sub)
        status = "refused" if rep.refused else ("pass" if rep.passed else "fail")
        if status == "fail":
            worst = EXIT_FAIL
        rows.append((alpha, p, r, status, rep.evidence.get("energy"),
                     rep.evidence.get("grad_norm_exact")))
        entries.append({"alpha": alpha, "p": p, "r": r, "status": status,
                        "report": rep.to_dict()})
    io.write_csv(out / "sweep.csv", ("alpha", "p", "r", "status", "energy", "grad_norm"), rows)
    io.write_json(out / "report.json", {"mode": "sweep", "config_echo": config.to_dict(),
                                        "entries": entries})
    return worst


RUNNERS = {"solve": _run_solve, "multistart": _run_multistart, "verify": _run_verify,
           "embedding": _run_embedding, "sweep": _run_sweep}


def run(config: RunConfig, out_dir=None, *, dump_operator: bool = False) -> int:
    out = _prepare(out_dir or config.output_dir)
    if dump_operator:
        dump_csv(config.problem.context().left_op, out / "operator.csv")
    return RUNNERS[config.mode](config, out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracplap", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--mode", choices=sorted(RUNNERS), help="override the configured mode")
    ap.add_argument("--out", help="output directory (overrides output_dir)")
    ap.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    ap.add_argument("--dump-operator", action="store_true",
                    help="also write the left derivative matrix to operator.csv")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        config = parse_config(args.config)
    except ConfigError as exc:
        for err in exc.errors:
            log.error("%s", err)
        return EXIT_ERROR
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_ERROR
    for note in config.warnings:
        log.warning("%s", note)
    if args.mode:
        config = replace(config, mode=args.mode)
    try:
        return run(config, args.out, dump_operator=args.dump_operator)
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    except Exception:  # noqa: BLE001
        log.exception("internal error")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
