"""The prefactor kappa: supremum over lambda of the speed-limit objective.

Unbiased estimation uses ``pi alpha(4/lambda^2) / (4 lambda)``; biased
estimation replaces ``lambda`` by ``lambda + 1`` in the denominator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import OutOfDomain
from .speed_limit import BETA_SQUARED, AlphaModel, alpha

UNBIASED = "unbiased"
BIASED = "biased"
MODES = (UNBIASED, BIASED)

# The objective is at most pi / (4 lambda) since alpha <= 1, i.e. below 0.008
# past lambda = 100, an order of magnitude under the peak near lambda = 4-5.
LAMBDA_MIN = 2.0 + 1e-6
LAMBDA_MAX = 100.0
GRID_STEP = 1e-3
REFINE_XTOL = 1e-8


@dataclass(frozen=True)
class KappaResult:
    kappa: float
    lambda_star: float | None
    mode: str
    alpha_model_id: str

    @classmethod
    def fixed(cls, kappa: float, mode: str = UNBIASED, label: str = "user-supplied") -> "KappaResult":
        """A kappa value given by hand rather than optimized."""
        return cls(float(kappa), None, mode, label)


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def kappa_objective(lam, mode: str = UNBIASED, model: AlphaModel = BETA_SQUARED):
    _check_mode(mode)
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr < 2.0) or np.any(np.isnan(lam_arr)):
        raise OutOfDomain("lambda must be >= 2")
    denom = lam_arr if mode == UNBIASED else lam_arr + 1.0
    out = np.pi * alpha(4.0 / lam_arr**2, model) / (4.0 * denom)
    return float(out) if np.ndim(out) == 0 else out


def is_unimodal(values: np.ndarray) -> bool:
    """True when the sequence rises then falls (flat steps ignored)."""
    d = np.sign(np.diff(values))
    d = d[d != 0]
    if d.size == 0:
        return True
    return int(np.count_nonzero(np.diff(d) != 0)) <= 1 and (d[0] > 0 or np.all(d < 0))


def _grid_then_golden(fn, lo: float, hi: float, step: float) -> tuple[float, float, bool]:
    grid = np.arange(lo, hi + 0.5 * step, step)
    values = fn(grid)
    i = int(np.argmax(values))
    best_x, best_v = float(grid[i]), float(values[i])
    if not is_unimodal(values) or i == 0 or i == grid.size - 1:
        return best_x, best_v, False
    res = optimize.minimize_scalar(
        lambda t: -fn(t),
        bracket=(grid[i - 1], grid[i], grid[i + 1]),
        method="golden",
        options={"xtol": REFINE_XTOL / grid[i]},
    )
    x = float(res.x)
    v = float(fn(x))
    if v < best_v:
        return best_x, best_v, True
    return x, v, True


def optimize_kappa(mode: str = UNBIASED, model: AlphaModel = BETA_SQUARED) -> KappaResult:
    """Grid scan over ``[2 + 1e-6, 100]`` at step 1e-3, then golden-section refinement.

    If the scan shows more than one peak, the best grid point is returned
    unrefined.
    """
    _check_mode(mode)
    lam, value, _ = _grid_then_golden(
        lambda t: kappa_objective(t, mode, model), LAMBDA_MIN, LAMBDA_MAX, GRID_STEP
    )
    return KappaResult(value, lam, mode, model.label)


def kappa_curve(mode: str, model: AlphaModel, lambda_grid) -> list[tuple[float, float]]:
    grid = [float(v) for v in lambda_grid]
    values = kappa_objective(np.array(grid), mode, model) if grid else []
    return [(g, float(v)) for g, v in zip(grid, np.atleast_1d(values))]


def cr_prefactor(lam):
    """``arccos(2/lambda) / (2 lambda)``, equal to ``pi beta(4/lambda^2) / (4 lambda)``."""
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr < 2.0):
        raise OutOfDomain("lambda must be >= 2")
    out = np.arccos(2.0 / lam_arr) / (2.0 * lam_arr)
    return float(out) if np.ndim(out) == 0 else out


def cr_prefactor_sup() -> tuple[float, float]:
    """Supremum of the Cramer-Rao-type prefactor over ``lambda`` in ``[2, 100]``."""
    lam, value, _ = _grid_then_golden(cr_prefactor, 2.0, LAMBDA_MAX, GRID_STEP)
    if not value < 1.0:
        raise AssertionError(f"prefactor supremum {value} is not below 1")
    return value, lam


def exact_alpha_reference(mode: str) -> float:
    """Published kappa under the exact alpha, for labelling output only."""
    _check_mode(mode)
    return 0.091 if mode == UNBIASED else 0.074

