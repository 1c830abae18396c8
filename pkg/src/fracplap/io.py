"""JSON and CSV writers with deterministic, full-precision number formatting."""

from __future__ import annotations

import csv
import dataclasses
import enum
import json
import math
from pathlib import Path

import numpy as np

FLOAT_FMT = "{:.16e}"


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if dataclasses.is_dataclass(obj):
        return to_jsonable(dataclasses.asdict(obj))
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def write_json(path, obj) -> None:
    text = json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT.format(float(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def solution_rows(results, left_matrix, nodes):
    for k, res in enumerate(results):
        u = res.u.values
        Lu = left_matrix @ u
        for t, ui, di in zip(nodes, u, Lu):
            yield (k, float(t), float(ui), float(di))


def write_solutions(path, results, ctx) -> None:
    write_csv(path, ("solution", "t", "u", "Lu"),
              solution_rows(results, ctx.left_op.matrix, ctx.grid.nodes))


def write_curves(path, probe=None, results=()) -> None:
    """Long-format plot data: scaling curve ``(s, I)`` and descent traces."""
    rows = []
    if probe is not None:
        rows.extend(("scaling", 0, float(s), float(v)) for s, v in zip(probe.s, probe.values))
    for k, res in enumerate(results):
        for entry in res.trace:
            rows.append(("trace_energy", k, float(entry[0]), float(entry[1])))
            rows.append(("trace_grad_norm", k, float(entry[0]), float(entry[2])))
    write_csv(path, ("curve", "run", "x", "y"), rows)
