"""Observation container and its CSV format.

A dataset file starts with one header line::

    # bagus-dataset v1, n=<n>, p=<p>, seed=<seed>, model=<model>

followed by ``n`` comma-separated rows. The ground-truth precision matrix,
when known, lives next to it as ``<name>.truth.csv``. Plain headerless
numeric CSVs are accepted on load.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidDataError

__all__ = ["Dataset", "save_dataset", "load_dataset", "save_matrix", "load_matrix",
           "format_row"]

_HEADER = re.compile(r"^#\s*bagus-dataset\s+v1\s*,(.*)$")


@dataclass(frozen=True)
class Dataset:
    """``n`` observations of ``p`` variables as rows, plus provenance.

    ``model`` is set for simulated data; ``generator`` records the bit
    generator that produced ``rows``.
    """

    rows: np.ndarray
    truth: Optional[np.ndarray] = None
    seed: Optional[int] = None
    model: Optional[str] = None
    generator: Optional[str] = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise InvalidDataError(f"rows must be a non-empty (n, p) array, got {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise InvalidDataError("rows contain non-finite values")
        object.__setattr__(self, "rows", rows)
        if self.truth is not None:
            truth = np.asarray(self.truth, dtype=float)
            if truth.shape != (rows.shape[1], rows.shape[1]):
                raise InvalidDataError(f"truth has shape {truth.shape}, expected p x p")
            object.__setattr__(self, "truth", truth)

    @property
    def n(self):
        return self.rows.shape[0]

    @property
    def p(self):
        return self.rows.shape[1]


def format_row(values):
    """Comma-join with 17 significant digits, enough for an exact round trip."""
    return ",".join(format(float(v), ".17g") for v in values)


def save_matrix(path, m, header=None):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        if header:
            fh.write(f"# {header}\n")
        for row in m:
            fh.write(format_row(row) + "\n")


def load_matrix(path):
    """Read a numeric CSV, skipping ``#`` lines."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append([float(x) for x in line.split(",")])
            except ValueError:
                raise InvalidDataError(f"{path}:{lineno}: not a numeric row") from None
    if not rows:
        raise InvalidDataError(f"{path}: no data rows")
    if len({len(r) for r in rows}) != 1:
        raise InvalidDataError(f"{path}: rows have differing lengths")
    return np.array(rows, dtype=float)


def _truth_path(path):
    root, ext = os.path.splitext(path)
    return root + ".truth" + (ext or ".csv")


def save_dataset(path, data):
    header = (f"bagus-dataset v1, n={data.n}, p={data.p}, seed={data.seed}, "
              f"model={data.model}")
    save_matrix(path, data.rows, header=header)
    if data.truth is not None:
        save_matrix(_truth_path(path), data.truth)


def load_dataset(path):
    """Load either format; the header, when present, must match the body."""
    meta = {}
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    m = _HEADER.match(first)
    if m:
        for item in m.group(1).split(","):
            key, _, value = item.strip().partition("=")
            meta[key] = value.strip()
    rows = load_matrix(path)
    if m:
        try:
            n, p = int(meta["n"]), int(meta["p"])
        except (KeyError, ValueError):
            raise InvalidDataError(f"{path}: malformed dataset header") from None
        if rows.shape != (n, p):
            raise InvalidDataError(f"{path}: header says {n}x{p}, body is "
                                   f"{rows.shape[0]}x{rows.shape[1]}")
    seed = meta.get("seed")
    seed = int(seed) if seed not in (None, "None") else None
    model = meta.get("model")
    model = model if model not in (None, "None") else None
    truth = None
    tpath = _truth_path(path)
    if m and os.path.exists(tpath):
        truth = load_matrix(tpath)
    return Dataset(rows=rows, truth=truth, seed=seed, model=model)
