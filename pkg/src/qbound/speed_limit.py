"""Quantum speed-limit functions and the minimum parameter separation.

``beta(F) = 2 arccos(sqrt F) / pi`` is closed form. ``alpha(F)`` defaults to the
approximation ``beta(F)**2``; exact values can be supplied as a lookup table.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NoResources, OutOfDomain, QBoundError, TableRangeExceeded

DOMAIN_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class AlphaModel:
    """Which ``alpha(F)`` to use: ``"beta_squared"`` or ``"table"``."""

    kind: str = "beta_squared"
    fidelities: np.ndarray | None = None
    values: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        if self.kind == "beta_squared":
            return
        if self.kind != "table":
            raise QBoundError(f"unknown alpha model kind {self.kind!r}")
        f = np.asarray(self.fidelities, dtype=float)
        a = np.asarray(self.values, dtype=float)
        if f.ndim != 1 or f.shape != a.shape or f.size < 2:
            raise QBoundError("alpha table needs at least two (F, alpha) rows")
        if np.any(np.diff(f) <= 0):
            raise QBoundError("alpha table fidelities must be strictly increasing")
        if f[0] < 0 or f[-1] > 1 or np.any(a < 0) or np.any(a > 1):
            raise QBoundError("alpha table entries must lie in [0, 1] x [0, 1]")
        if np.any(np.diff(a) > 0):
            raise QBoundError("alpha table values must be non-increasing in F")
        object.__setattr__(self, "fidelities", f)
        object.__setattr__(self, "values", a)

    @property
    def label(self) -> str:
        if self.kind == "beta_squared":
            return "beta-squared-approx"
        return f"table:{self.name}" if self.name else "table"

    @classmethod
    def from_table(cls, rows, name: str = "") -> "AlphaModel":
        rows = list(rows)
        if not rows:
            raise QBoundError("alpha table is empty")
        f, a = zip(*rows)
        return cls("table", np.array(f), np.array(a), name)

    @classmethod
    def from_csv(cls, path) -> "AlphaModel":
        """Read a two-column CSV with a header row (F, alpha)."""
        path = Path(path)
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(row for row in fh if not row.startswith("#"))
            header = next(reader, None)
            if header is None or len(header) < 2:
                raise QBoundError(f"{path}: missing header row")
            try:
                float(header[0])
            except ValueError:
                pass
            else:
                raise QBoundError(f"{path}: first row must be a header, got numbers")
            rows = [(float(r[0]), float(r[1])) for r in reader if r]
        return cls.from_table(rows, name=path.name)


BETA_SQUARED = AlphaModel()


def _clip_fidelity(f):
    f = np.asarray(f, dtype=float)
    if np.any(f < -DOMAIN_SLACK) or np.any(f > 1 + DOMAIN_SLACK) or np.any(np.isnan(f)):
        raise OutOfDomain("fidelity must lie in [0, 1]")
    return np.clip(f, 0.0, 1.0)


def beta(f):
    """``2 arccos(sqrt(f)) / pi``; accepts scalars or arrays."""
    out = 2.0 * np.arccos(np.sqrt(_clip_fidelity(f))) / np.pi
    return float(out) if np.ndim(out) == 0 else out


def alpha(f, model: AlphaModel = BETA_SQUARED):
    fc = _clip_fidelity(f)
    if model.kind == "beta_squared":
        b = 2.0 * np.arccos(np.sqrt(fc)) / np.pi
        out = b * b
    else:
        lo, hi = model.fidelities[0], model.fidelities[-1]
        if np.any(fc < lo - DOMAIN_SLACK) or np.any(fc > hi + DOMAIN_SLACK):
            raise TableRangeExceeded(f"fidelity outside table range [{lo:g}, {hi:g}]")
        out = np.interp(fc, model.fidelities, model.values)
    return float(out) if np.ndim(out) == 0 else out


def qsl_min_separation(
    f: float,
    nu: int,
    gap: float,
    delta_h: float,
    model: AlphaModel = BETA_SQUARED,
) -> float:
    """Smallest ``|x' - x|`` compatible with joint fidelity ``f`` after ``nu`` copies.

    ``(pi/2) max(alpha(f) / (nu gap), beta(f) / (sqrt(nu) delta_h))``, where a
    branch whose resource is zero is dropped.
    """
    if nu < 1:
        raise QBoundError("nu must be a positive integer")
    if gap < 0 or delta_h < 0:
        raise QBoundError("gap and delta_h must be non-negative")
    a = alpha(f, model)
    b = beta(f)
    if a == 0.0 and b == 0.0:
        return 0.0
    branches = []
    if gap > 0:
        branches.append(a / (nu * gap))
    if delta_h > 0:
        branches.append(b / (math.sqrt(nu) * delta_h))
    if not branches:
        raise NoResources("gap and delta_h are both zero; separation is unbounded")
    return 0.5 * math.pi * max(branches)
