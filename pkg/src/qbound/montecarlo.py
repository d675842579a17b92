"""Sampled estimation experiments: empirical RMSE and bound-compliance verdicts.

Trials are split into fixed-size blocks. Block ``b`` draws from the substream
``(seed, "trial", b)`` and bootstrap resample ``i`` from ``(seed, "boot", i)``,
so the report depends only on the configuration, never on how blocks are
spread over workers.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bounds import BoundReport
from .errors import QBoundError
from .estimation import (
    DEFAULT_CAP,
    PER_COPY,
    Strategy,
    outcome_distribution,
)
from .rng import substream
from .states import evolve

BLOCK = 4096
BOOTSTRAP = 200


class Verdict(str, enum.Enum):
    COMPLIANT = "Compliant"
    VIOLATION = "Violation"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True, eq=False)
class TrialConfig:
    strategy: Strategy
    x_true: float
    trials: int
    seed: int

    def __post_init__(self):
        if int(self.trials) < 1:
            raise QBoundError("trials must be at least 1")


@dataclass(frozen=True)
class EmpiricalReport:
    delta_x_hat: float
    std_error: float
    trials: int
    x_true: float


class _Sampler:
    """Draws estimates for blocks of trials at a fixed parameter value."""

    def __init__(self, strategy: Strategy, x: float, cap: int):
        self.nu = strategy.nu
        est = strategy.estimator
        self.labels = strategy.povm.labels
        if strategy.povm_scope == PER_COPY and est.uses_counts:
            # multinomial counts are enough, whatever nu is
            self.p = strategy.povm.probabilities(evolve(strategy.probe, strategy.gen, x))
            self.counts_fn = est.counts_fn
            return
        self.counts_fn = None
        dist = outcome_distribution(strategy, x, cap=cap)
        self.values = est.values_for(dist)
        cdf = np.cumsum(dist.probs)
        self.cdf = cdf / cdf[-1]

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.counts_fn is not None:
            counts = rng.multinomial(self.nu, self.p, size=n)
            return np.asarray(self.counts_fn(counts, self.labels), dtype=float)
        idx = np.searchsorted(self.cdf, rng.random(n), side="right")
        return self.values[np.minimum(idx, self.values.size - 1)]


def squared_errors(config: TrialConfig, workers: int = 1, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Per-trial ``(x_hat - x_true)^2`` in canonical trial order."""
    sampler = _Sampler(config.strategy, config.x_true, cap)
    trials = int(config.trials)
    n_blocks = -(-trials // BLOCK)

    def block(b: int) -> np.ndarray:
        n = min(BLOCK, trials - b * BLOCK)
        est = sampler.draw(substream(config.seed, "trial", b), n)
        return (est - config.x_true) ** 2

    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block, range(n_blocks)))
    else:
        parts = [block(b) for b in range(n_blocks)]
    return np.concatenate(parts)


def bootstrap_rmse_se(sq: np.ndarray, seed: int, resamples: int = BOOTSTRAP) -> float:
    n = sq.size
    if n < 2:
        return 0.0
    stats = np.empty(resamples)
    for i in range(resamples):
        idx = substream(seed, "boot", i).integers(0, n, n)
        stats[i] = math.sqrt(float(np.mean(sq[idx])))
    return float(np.std(stats, ddof=1))


def simulate(config: TrialConfig, workers: int = 1, cap: int = DEFAULT_CAP) -> EmpiricalReport:
    """Empirical RMSE of the strategy at ``x_true`` with a bootstrap standard error."""
    sq = squared_errors(config, workers, cap)
    dx = math.sqrt(float(np.mean(sq)))
    if not math.isfinite(dx):
        raise QBoundError("estimator produced non-finite estimates")
    return EmpiricalReport(dx, bootstrap_rmse_se(sq, config.seed), int(config.trials), float(config.x_true))


def _target(bound: BoundReport, against: str) -> float:
    if against == "envelope":
        return bound.envelope
    if against == "ev":
        return bound.ev_bound
    if against == "cr":
        return bound.cr_bound
    raise QBoundError(f"unknown comparison target {against!r}")


def compliance(report: EmpiricalReport, bound: BoundReport, sigma_slack: float = 3.0,
               against: str = "envelope") -> Verdict:
    """Compare the empirical RMSE with a bound, allowing ``sigma_slack`` standard errors.

    Compliant when the RMSE clears the bound even after subtracting the slack,
    Violation when it stays below the bound even after adding it, otherwise
    Inconclusive. ``against`` selects ``"envelope"``, ``"ev"`` or ``"cr"``.
    """
    if sigma_slack < 0:
        raise QBoundError("sigma_slack must be non-negative")
    target = _target(bound, against)
    slack = sigma_slack * report.std_error
    if report.delta_x_hat - slack >= target:
        return Verdict.COMPLIANT
    if report.delta_x_hat + slack < target:
        return Verdict.VIOLATION
    return Verdict.INCONCLUSIVE
