"""CSV and NDJSON serialization for point clouds and experiment rows."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .validation import as_points

__all__ = ["write_points_csv", "read_points_csv", "write_rows", "read_ndjson"]


def write_points_csv(path, points):
    """Point cloud as CSV with header x0..x{d-1}."""
    pts = as_points(points)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(pts.shape[1])])
        writer.writerows([[repr(float(v)) for v in row] for row in pts])
    return path


def read_points_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not all(h == f"x{i}" for i, h in enumerate(header)):
            raise ValueError(f"unexpected point-cloud header {header!r} in {path}")
        rows = [[float(v) for v in row] for row in reader]
    return as_points(np.asarray(rows), name=str(path))


def write_rows(path, rows, fmt="csv"):
    """Uniform list-of-dicts writer; fmt is 'csv' or 'ndjson'."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = list(rows)
    if fmt == "ndjson":
        with open(path, "w") as fh:
            for row in rows:
                fh.write(json.dumps(row) + "\n")
        return path
    if fmt == "csv":
        if not rows:
            path.write_text("")
            return path
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
        return path
    raise ValueError(f"unknown format {fmt!r}")


def read_ndjson(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
