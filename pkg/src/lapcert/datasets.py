"""Dataset loading and seeded, prefix-stable synthetic data streams.

A stream of length ``n`` is the first ``n`` rows of an infinite sequence built
from fixed-size chunks, chunk ``k`` drawn from a generator seeded by
``(seed, k)``. Growing ``n`` therefore extends the data instead of
resampling it.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

CHUNK = 1024


class DatasetError(ValueError):
    """Malformed dataset; the message names the offending row."""


def load_table(path, delimiter: str | None = None) -> np.ndarray:
    """Read a delimiter-separated numeric table (comma, tab, semicolon or whitespace).

    Lines starting with ``#`` and blank lines are skipped. A non-numeric first
    row is treated as a header.

    Raises
    ------
    DatasetError
        On ragged rows or unparseable values, naming the 1-based line number.
    """
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if delimiter is None:
        sample = next((ln for ln in lines if ln.strip() and not ln.lstrip().startswith("#")), "")
        delimiter = next((c for c in (",", "\t", ";") if c in sample), None)
    rows = []
    width = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = next(csv.reader([line], delimiter=delimiter)) if delimiter else line.split()
        cells = [c.strip() for c in cells]
        try:
            vals = [float(c) for c in cells]
        except ValueError:
            if not rows and width is None:
                width = len(cells)
                continue
            raise DatasetError(f"row {lineno}: non-numeric value in {line!r}") from None
        if width is None:
            width = len(vals)
        if len(vals) != width:
            raise DatasetError(f"row {lineno}: expected {width} columns, found {len(vals)}")
        if not all(math.isfinite(v) for v in vals):
            raise DatasetError(f"row {lineno}: non-finite value")
        rows.append(vals)
    if not rows:
        raise DatasetError("dataset has no data rows")
    return np.asarray(rows, dtype=float)


def save_table(path, table, header: str | None = None) -> None:
    table = np.atleast_2d(np.asarray(table, dtype=float))
    if table.shape[0] == 1 and table.ndim == 2 and header is None:
        table = table.T
    np.savetxt(path, table, delimiter=",", header=header or "", comments="# " if header else "")


@dataclass(frozen=True)
class DataRecipe:
    """Synthetic data recipe.

    ``kind`` is one of ``exponential`` (``scale``), ``weibull`` (``shape``,
    ``scale``), ``poisson`` (``rate``) or ``logistic`` (``theta``: true
    coefficients; covariates standard normal, labels in {-1, +1}).
    """

    kind: str
    params: dict = field(default_factory=dict)


def _chunk(recipe: DataRecipe, rng: np.random.Generator) -> np.ndarray:
    p = recipe.params
    if recipe.kind == "exponential":
        return rng.exponential(float(p.get("scale", 1.0)), CHUNK)
    if recipe.kind == "weibull":
        return float(p.get("scale", 1.0)) * rng.weibull(float(p["shape"]), CHUNK)
    if recipe.kind == "poisson":
        return rng.poisson(float(p["rate"]), CHUNK).astype(float)
    if recipe.kind == "logistic":
        theta = np.asarray(p["theta"], dtype=float)
        X = rng.standard_normal((CHUNK, theta.size))
        y = np.where(rng.random(CHUNK) < special.expit(X @ theta), 1.0, -1.0)
        return np.column_stack([X, y])
    raise ValueError(f"unknown data recipe {recipe.kind!r}")


def generate(recipe: DataRecipe, n: int, seed: int) -> np.ndarray:
    """First ``n`` rows of the seeded stream (vector for scalar data, table for logistic)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    chunks = [_chunk(recipe, np.random.default_rng([int(seed), k])) for k in range(-(-n // CHUNK))]
    if not chunks:
        return np.empty((0, len(recipe.params.get("theta", ())) + 1)) if recipe.kind == "logistic" else np.empty(0)
    return np.concatenate(chunks, axis=0)[:n]
