"""Serialization of verification reports: JSON plus plot-ready CSV.

Data files carry no timestamps and no environment state, so a rerun with
the same configuration produces byte-identical output; the run manifest
is the one place wall-clock information lives.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from .analysis import VerificationReport


def _series_table(value):
    """Normalize a series entry to (columns, rows of floats)."""
    if isinstance(value, dict):
        cols = list(value)
        arrs = [np.atleast_1d(np.asarray(value[c], float)) for c in cols]
        n = len(arrs[0])
        if any(len(a) != n for a in arrs):
            raise ValueError("series columns must share a length")
        return cols, [[a[i] for a in arrs] for i in range(n)]
    arr = np.asarray(value, float)
    if arr.ndim == 1:
        return ["index", "value"], [[float(i), v] for i, v in enumerate(arr)]
    if arr.ndim == 2:
        cols = ["index"] + [f"c{j}" for j in range(arr.shape[1])]
        return cols, [[float(i)] + list(row) for i, row in enumerate(arr)]
    raise ValueError(f"cannot tabulate a {arr.ndim}-d series")


def write_report(run_dir, report: VerificationReport):
    """Write report.json and one CSV per series; returns written paths."""
    os.makedirs(run_dir, exist_ok=True)
    paths = []
    jpath = os.path.join(run_dir, "report.json")
    with open(jpath, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(jpath)
    for name in sorted(report.series):
        cols, rows = _series_table(report.series[name])
        cpath = os.path.join(run_dir, f"series_{name}.csv")
        with open(cpath, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(cols)
            for row in rows:
                writer.writerow([str(float(x)) for x in row])
        paths.append(cpath)
    return paths


def read_report(run_dir):
    with open(os.path.join(run_dir, "report.json")) as fh:
        return json.load(fh)
