"""Deterministic file output: delimited tables, field dumps, JSON reports.

Every writer builds the full byte string first and publishes it with a
temp-file-plus-rename, so readers never observe a partial file and repeated
runs with identical inputs produce identical bytes.  Floats carry 12
significant digits; booleans serialize as lowercase true/false; vector
values (2-D maximizers, per-axis boxes) join components with semicolons so
the comma structure of a row is fixed.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grid import Grid, ScalarField
from .experiments import SweepRow

__all__ = [
    "format_float",
    "atomic_write_text",
    "write_csv",
    "write_field",
    "read_field",
    "write_json",
    "CSV_HEADER",
]

CSV_HEADER = "eps,c_eps,eta,V_eta,sup_outside,a0,equivalent,residual,iters,box_used"


def format_float(v: float) -> str:
    """12 significant digits; nan/inf spelled as Python floats print them."""
    return f"{float(v):.12g}"


def atomic_write_text(path, text: str) -> None:
    """Write via a sibling temp file and rename into place."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=p.parent, prefix=p.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, p)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt_vector(components) -> str:
    return ";".join(format_float(c) for c in components)


def _fmt_box(box) -> str:
    return ";".join(
        f"{format_float(lo)}:{format_float(hi)}" for lo, hi in box
    )


def write_csv(rows: list[SweepRow], path) -> None:
    """Sweep table with the fixed header; one line per eps, newline-terminated."""
    lines = [CSV_HEADER]
    for r in rows:
        eta = format_float(r.eta[0]) if len(r.eta) == 1 else _fmt_vector(r.eta)
        lines.append(
            ",".join(
                [
                    format_float(r.eps),
                    format_float(r.c_eps),
                    eta,
                    format_float(r.V_eta),
                    format_float(r.sup_outside),
                    format_float(r.a0),
                    "true" if r.equivalent else "false",
                    format_float(r.residual),
                    str(int(r.iters)),
                    _fmt_box(r.box_used),
                ]
            )
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def _sidecar_path(path) -> Path:
    p = Path(path)
    if p.suffix == ".json":
        return p.with_suffix(".meta.json")
    return p.with_suffix(".json")


def grid_metadata(grid: Grid) -> dict:
    return {
        "dim": grid.dim,
        "lo": list(grid.lo),
        "hi": list(grid.hi),
        "h": grid.h,
        "n_cells": list(grid.n_cells),
        "layout": "row-major",
    }


def write_field(field: ScalarField, path) -> None:
    """Plain-text table of cell centers and values, plus a JSON sidecar.

    Lines are x,u in 1-D and x,y,u in 2-D, cells in row-major order by axis.
    The sidecar carries the grid metadata needed to rebuild the field.
    """
    grid = field.grid
    mesh = grid.center_mesh()
    cols = [m.ravel() for m in mesh] + [field.values.ravel()]
    lines = [
        ",".join(format_float(c[i]) for c in cols) for i in range(cols[0].size)
    ]
    atomic_write_text(path, "\n".join(lines) + "\n")
    write_json(grid_metadata(grid), _sidecar_path(path))


def read_field(path) -> ScalarField:
    """Rebuild a field from a table and its sidecar."""
    p = Path(path)
    meta = json.loads(_sidecar_path(p).read_text())
    from .grid import build_grid  # local to avoid import noise at module load

    grid = build_grid(meta["dim"], meta["lo"], meta["hi"], meta["h"], min_cells=1)
    if list(grid.n_cells) != meta["n_cells"]:
        raise ConfigError("sidecar cell counts disagree with the rebuilt grid")
    rows = np.loadtxt(p, delimiter=",", ndmin=2)
    values = rows[:, -1].reshape(grid.n_cells)
    return ScalarField(grid, values)


def write_json(obj, path) -> None:
    """Stable JSON: sorted keys, no timestamps, newline-terminated."""
    atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")
