"""CSV telemetry and per-figure data series."""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from formsim import dynamics as dyn
from formsim._atomic import atomic_write_text
from formsim.engine import SimLog
from formsim.errors import ParseError

COLUMNS = (
    "t", "agent", "x", "y", "z", "vx", "vy", "vz",
    "phi", "theta", "psi", "p", "q", "r", "xd", "yd", "err", "flags",
)
HEADER = ",".join(COLUMNS)
_FMT = ["%.9g", "%d"] + ["%.9g"] * 15 + ["%d"]


def _to_text(table: np.ndarray, header: str, fmt) -> str:
    buf = io.StringIO()
    np.savetxt(buf, table, fmt=fmt, delimiter=",", header=header, comments="")
    return buf.getvalue()


def log_table(log: SimLog) -> np.ndarray:
    """Flatten a log to one row per (step, agent) in telemetry column order."""
    k, n = log.err.shape
    rows = np.empty((k, n, len(COLUMNS)))
    rows[..., 0] = log.t[:, None]
    rows[..., 1] = np.arange(1, n + 1)[None, :]
    rows[..., 2:14] = log.states
    rows[..., 14:16] = log.setpoints
    rows[..., 16] = log.err
    rows[..., 17] = log.flags
    return rows.reshape(k * n, len(COLUMNS))


def write_log(log: SimLog, path) -> None:
    atomic_write_text(path, _to_text(log_table(log), HEADER, _FMT))


def read_log(path) -> SimLog:
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != COLUMNS:
            raise ParseError(f"{path}: row 1: expected header {HEADER!r}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(COLUMNS):
                raise ParseError(
                    f"{path}: row {lineno}: expected {len(COLUMNS)} fields, got {len(rec)}"
                )
            try:
                rows.append([float(v) for v in rec])
            except ValueError as exc:
                raise ParseError(f"{path}: row {lineno}: {exc}") from exc
    if not rows:
        return SimLog(
            np.empty(0), np.empty((0, 0, dyn.STATE_DIM)), np.empty((0, 0, 2)),
            np.empty((0, 0)), np.empty((0, 0), dtype=np.int64),
        )

    table = np.array(rows)
    n = int(table[:, 1].max())
    if len(table) % n:
        raise ParseError(f"{path}: {len(table)} rows is not a multiple of {n} agents")
    k = len(table) // n
    grid = table.reshape(k, n, len(COLUMNS))
    expected = np.arange(1, n + 1)
    for step in range(k):
        if not np.array_equal(grid[step, :, 1], expected) or np.any(grid[step, :, 0] != grid[step, 0, 0]):
            raise ParseError(f"{path}: row {2 + step * n}: rows not ordered by (t, agent)")
    t = grid[:, 0, 0]
    if np.any(np.diff(t) <= 0):
        raise ParseError(f"{path}: time column is not strictly increasing")
    return SimLog(
        t=t.copy(),
        states=grid[..., 2:14].copy(),
        setpoints=grid[..., 14:16].copy(),
        err=grid[..., 16].copy(),
        flags=grid[..., 17].astype(np.int64),
    )


def _series(log: SimLog, columns, names) -> tuple[np.ndarray, str]:
    """Wide table: t followed by each named quantity for every agent."""
    n = log.n
    parts = [log.t[:, None]]
    header = ["t"]
    for i in range(n):
        for col, name in zip(columns, names):
            parts.append(col[:, i, None])
            header.append(f"{name}_{i + 1}")
    return np.hstack(parts), ",".join(header)


def write_plotdata(log: SimLog, outdir) -> list[Path]:
    """Emit the raw series behind the usual formation plots.

    setpoints.csv   generated x/y setpoints against time
    paths.csv       x, y, z of each agent (2D and 3D paths)
    attitude.csv    roll and pitch of each agent [rad]
    formation_error.csv  distance of each agent from its slot
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    s = log.states
    series = {
        "setpoints.csv": ((log.setpoints[..., 0], log.setpoints[..., 1]), ("xd", "yd")),
        "paths.csv": ((s[..., dyn.X], s[..., dyn.Y], s[..., dyn.Z]), ("x", "y", "z")),
        "attitude.csv": ((s[..., dyn.PHI], s[..., dyn.THETA]), ("phi", "theta")),
        "formation_error.csv": ((log.err,), ("err",)),
    }
    written = []
    for name, (cols, labels) in series.items():
        table, header = _series(log, cols, labels)
        path = outdir / name
        atomic_write_text(path, _to_text(table, header, "%.9g"))
        written.append(path)
    return written
