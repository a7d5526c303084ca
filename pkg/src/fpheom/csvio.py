"""Deterministic CSV emission (17 significant digits, '.' decimal separator)."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def format_number(x) -> str:
    return format(float(x), ".17g")


def write_csv(path, columns: dict) -> Path:
    path = Path(path)
    names = list(columns)
    data = [np.asarray(columns[n], dtype=float) for n in names]
    lengths = {d.size for d in data}
    if len(lengths) > 1:
        raise ValueError(f"columns have unequal lengths: {sorted(lengths)}")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(names)
        for row in zip(*data):
            writer.writerow([format_number(v) for v in row])
    return path


def read_csv(path) -> dict:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    arr = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))
    return {name: arr[:, i] for i, name in enumerate(header)}
