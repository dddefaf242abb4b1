"""Plain-text snapshot and series files."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import Grid, State

SNAPSHOT_HEADER = "x,y,u,v,phi"


def emit_snapshot(state: State, path) -> Path:
    """One node per line, ``i`` outer and ``j`` inner, 17 significant digits."""
    path = Path(path)
    g = state.grid
    X, Y = g.mesh()
    table = np.column_stack([X.ravel(), Y.ravel()] + [c.ravel() for c in state.data])
    with open(path, "w", newline="\n") as fh:
        fh.write(SNAPSHOT_HEADER + "\n")
        np.savetxt(fh, table, fmt="%.17g", delimiter=",")
    return path


def load_snapshot(path) -> State:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip()
        if header != SNAPSHOT_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        table = np.loadtxt(fh, delimiter=",", ndmin=2)
    xs = np.unique(table[:, 0])
    ys = np.unique(table[:, 1])
    nx, ny = len(xs), len(ys)
    if table.shape != (nx * ny, 5):
        raise ValueError(f"{path}: expected {nx * ny} nodes, found {table.shape[0]}")
    grid = Grid(float(xs[-1]), float(ys[-1]), nx, ny)
    data = table[:, 2:].T.reshape(3, nx, ny)
    return State(grid, np.ascontiguousarray(data))


def _fmt(v) -> str:
    v = float(v)
    if np.isnan(v):
        return "nan"
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return f"{v:.17g}"


def emit_series(columns: dict, path, schema: str) -> Path:
    """Write equally long columns as CSV under a ``# schema=<name> version=1`` line.

    ``columns`` may also be any object with a ``columns()`` method.
    """
    if hasattr(columns, "columns"):
        columns = columns.columns()
    names = list(columns)
    cols = [np.asarray(columns[n]).ravel() for n in names]
    if len({len(c) for c in cols}) > 1:
        raise ValueError("series columns differ in length")
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# schema={schema} version=1\n")
        fh.write(",".join(names) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def load_series(path) -> tuple[str, dict]:
    with open(path) as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema="):
            raise ValueError(f"{path}: missing schema line")
        schema = first.split()[1].split("=", 1)[1]
        names = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    data = {n: np.array([float(r[k]) for r in rows]) for k, n in enumerate(names)}
    return schema, data


def emit_summary(summary: dict, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return path
