"""Persistence of histories, field dumps, sweep tables, and run metadata.

Histories and sweep tables are comma-separated text with a commented header;
fields are flat little-endian float64 blocks with a JSON sidecar describing
shape and grid.  All floats are written with 17 significant digits so that a
parse of the file reproduces the original values bit for bit.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .scenarios import SweepRow
from .solvers import IterationRecord
from .spectral import Grid

__all__ = [
    "write_history",
    "read_history",
    "write_field",
    "read_field",
    "write_run_meta",
    "write_sweep",
]

HISTORY_COLUMNS = (
    "n", "energy", "quad_energy", "residual", "step_kind",
    "alpha_used", "backtracks", "ref_energy", "momentum",
)

SWEEP_COLUMNS = ("parameter", "classification", "energy", "iterations", "converged", "error")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    return str(value)


def _parse_opt_float(token: str) -> float | None:
    return None if token == "" else float(token)


def _parse_opt_int(token: str) -> int | None:
    return None if token == "" else int(token)


def write_history(path, history: list[IterationRecord]) -> None:
    """One row per iteration, in index order; header names columns."""
    path = Path(path)
    lines = ["# " + ",".join(HISTORY_COLUMNS)]
    for rec in history:
        lines.append(",".join(_fmt(v) for v in (
            rec.n, rec.energy, rec.quad_energy, rec.residual, rec.step_kind,
            rec.alpha_used, rec.backtracks, rec.ref_energy, rec.momentum,
        )))
    path.write_text("\n".join(lines) + "\n")


def read_history(path) -> list[IterationRecord]:
    records = []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        tok = line.split(",")
        records.append(IterationRecord(
            n=int(tok[0]),
            energy=float(tok[1]),
            quad_energy=float(tok[2]),
            residual=float(tok[3]),
            step_kind=tok[4],
            alpha_used=_parse_opt_float(tok[5]),
            backtracks=_parse_opt_int(tok[6]),
            ref_energy=_parse_opt_float(tok[7]),
            momentum=_parse_opt_float(tok[8]),
        ))
    return records


def write_field(out_dir, u: np.ndarray, grid: Grid) -> None:
    """Dump each component as field_<i>.bin plus a field_meta.json sidecar."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    u = np.ascontiguousarray(u, dtype="<f8")
    for i in range(u.shape[0]):
        (out_dir / f"field_{i}.bin").write_bytes(u[i].tobytes())
    meta = {
        "components": u.shape[0],
        "shape": list(u.shape[1:]),
        "dtype": "<f8",
        "order": "C",
        "half_width": grid.half_width,
        "subdivisions": grid.subdivisions,
        "component_files": [f"field_{i}.bin" for i in range(u.shape[0])],
    }
    (out_dir / "field_meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def read_field(out_dir) -> tuple[np.ndarray, dict]:
    out_dir = Path(out_dir)
    meta = json.loads((out_dir / "field_meta.json").read_text())
    shape = tuple(meta["shape"])
    parts = [
        np.frombuffer((out_dir / name).read_bytes(), dtype=meta["dtype"]).reshape(shape)
        for name in meta["component_files"]
    ]
    return np.stack(parts), meta


def write_run_meta(path, meta: dict) -> None:
    Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def write_sweep(path, rows: list[SweepRow]) -> None:
    """Delimited sweep table; failed rows keep their error message."""
    lines = ["# " + ",".join(SWEEP_COLUMNS)]
    for row in rows:
        err = "" if row.error is None else row.error.replace(",", ";").replace("\n", " ")
        lines.append(",".join(_fmt(v) for v in (
            row.parameter, row.classification, row.energy,
            row.iterations, row.converged,
        )) + f",{err}")
    Path(path).write_text("\n".join(lines) + "\n")
