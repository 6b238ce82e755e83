"""Run metrics persistence and plot-table export.

Metrics are line-delimited JSON with a fixed key order so identical
runs produce byte-identical files; floats round-trip exactly through
the shortest-round-trip decimal rendering. Wall-clock timings live in a
separate file because they can never be deterministic.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InvalidInput

METRIC_KEYS = (
    "iteration",
    "lambda_mean",
    "mean_discrepancy",
    "var_real",
    "var_gen",
    "i_d",
    "i_g",
)
TABLE_KEYS = ("iteration", "lambda_mean", "mean_discrepancy", "var_real", "var_gen")


@dataclass
class MetricsRecord:
    iteration: int
    lambda_mean: float
    mean_discrepancy: float
    var_real: float
    var_gen: float
    i_d: int
    i_g: int

    def __post_init__(self):
        self.iteration = int(self.iteration)
        self.i_d = int(self.i_d)
        self.i_g = int(self.i_g)
        for key in ("lambda_mean", "mean_discrepancy", "var_real", "var_gen"):
            value = float(getattr(self, key))
            if not np.isfinite(value):
                raise InvalidInput(f"{key} is not finite")
            setattr(self, key, value)


def _record_line(record: MetricsRecord) -> str:
    ordered = {key: getattr(record, key) for key in METRIC_KEYS}
    return json.dumps(ordered)


def write_metrics(records, path: str) -> None:
    """One JSON object per line, keys in METRIC_KEYS order."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(_record_line(record))
            fh.write("\n")


def read_metrics(path: str):
    """Inverse of write_metrics; exact float round-trip.

    Raises
    ------
    FormatError
        Line is not a JSON object or lacks a metric key.
    """
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
                records.append(MetricsRecord(**{key: payload[key] for key in METRIC_KEYS}))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise FormatError(f"{path}:{line_no}: bad metrics line: {exc}") from exc
    return records


def write_timings(seconds_per_iteration, path: str) -> None:
    """Diagnostic wall-clock log, one {iteration, wall_seconds} per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for iteration, seconds in seconds_per_iteration:
            fh.write(json.dumps({"iteration": int(iteration), "wall_seconds": float(seconds)}))
            fh.write("\n")


def export_plot_tables(records, out_dir: str):
    """Comma-delimited series behind the plots; returns written paths.

    Floats are rendered shortest-round-trip, so re-parsing reproduces
    the records exactly.
    """
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "metrics_table.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(TABLE_KEYS) + "\n")
        for record in records:
            fh.write(",".join(repr(getattr(record, key)) for key in TABLE_KEYS) + "\n")
    return [path]


def read_plot_table(path: str):
    """Parse an export_plot_tables file back into per-key value lists."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != TABLE_KEYS:
            raise FormatError(f"{path}: unexpected table header {header}")
        rows = []
        for line in fh:
            if not line.strip():
                continue
            cells = line.strip().split(",")
            if len(cells) != len(TABLE_KEYS):
                raise FormatError(f"{path}: malformed table row")
            rows.append(
                {
                    "iteration": int(cells[0]),
                    **{key: float(cells[i]) for i, key in enumerate(TABLE_KEYS) if i > 0},
                }
            )
    return rows
