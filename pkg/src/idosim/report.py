"""Delimited and JSON output for trajectories, value tables, sweeps and
learning traces.

All writers are deterministic: given the same inputs they produce
byte-identical files (no timestamps, stable float repr, sorted JSON keys).
"""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from . import __version__
from .dp import ValueTable

TRAJECTORY_HEADER = ["stage", "time", "inter_arrival", "type", "label"]
SWEEP_HEADER = ["param_name", "param_value", "metric", "index", "value", "seed"]
TRACE_HEADER = ["stage", "scheme", "index", "estimate", "learning_rate"]


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_trajectory(trajectory, labels, path):
    write_rows(path, TRAJECTORY_HEADER, trajectory.rows(labels))


def write_sweep(rows, path):
    """Rows of (param_name, param_value, metric, index, value, seed)."""
    write_rows(path, SWEEP_HEADER, rows)


def write_trace(rows, path):
    write_rows(path, TRACE_HEADER, rows)


def write_value_table_csv(table: ValueTable, path):
    write_rows(path, ["index", "value"], table.rows())


def write_value_table_json(table: ValueTable, path):
    doc = {
        "kind": table.kind,
        "engine_version": __version__,
        "gamma": table.gamma,
        "epsilon": table.epsilon,
        "iterations": table.iterations,
        "final_residual": table.final_residual,
        "values": {name: value for name, value in table.rows()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_rows_json(header, rows, path, **metadata):
    doc = {
        "engine_version": __version__,
        **metadata,
        "columns": list(header),
        "rows": [[float(v) if isinstance(v, (float, np.floating)) else v
                  for v in row] for row in rows],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
