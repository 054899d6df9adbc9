"""Trace CSV interchange: the single on-disk format every mobility consumer reads.

Format: header `traj_id,t_s,x_m,y_m`, one row per sample, rows grouped by
trajectory and sorted by time within each, floats printed with 6 decimals.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .errors import TraceFormatError
from .mobility import Trajectory

TRACE_HEADER = ["traj_id", "t_s", "x_m", "y_m"]


def _write(fh, trajectories: list[Trajectory]) -> None:
    writer = csv.writer(fh)
    writer.writerow(TRACE_HEADER)
    for tid, traj in enumerate(trajectories):
        for t, (x, y) in zip(traj.t, traj.xy):
            writer.writerow([tid, f"{t:.6f}", f"{x:.6f}", f"{y:.6f}"])


def save_traces(trajectories: list[Trajectory], path) -> None:
    with open(path, "w", newline="") as fh:
        _write(fh, trajectories)


def dumps_traces(trajectories: list[Trajectory]) -> str:
    buf = io.StringIO(newline="")
    _write(buf, trajectories)
    return buf.getvalue()


def _read(fh) -> list[Trajectory]:
    groups: dict[int, list[tuple[float, float, float]]] = {}
    order: list[int] = []
    reader = csv.reader(fh)
    header = next(reader, None)
    if header != TRACE_HEADER:
        raise TraceFormatError(f"expected header {','.join(TRACE_HEADER)}", line=1)
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise TraceFormatError(f"expected 4 fields, got {len(row)}", line=lineno)
        try:
            tid = int(row[0])
            t, x, y = float(row[1]), float(row[2]), float(row[3])
        except ValueError as exc:
            raise TraceFormatError(str(exc), line=lineno) from exc
        if tid not in groups:
            groups[tid] = []
            order.append(tid)
        elif groups[tid] and t <= groups[tid][-1][0]:
            raise TraceFormatError(
                f"timestamp {t} does not increase within trajectory {tid}", line=lineno
            )
        groups[tid].append((t, x, y))
    trajectories = []
    for tid in order:
        rows = np.asarray(groups[tid], dtype=np.float64)
        trajectories.append(Trajectory(t=rows[:, 0], xy=rows[:, 1:3]))
    return trajectories


def load_traces(path) -> list[Trajectory]:
    with open(Path(path), newline="") as fh:
        return _read(fh)


def loads_traces(text: str) -> list[Trajectory]:
    return _read(io.StringIO(text, newline=""))
