"""Evaluation of the precision bounds and the comparisons built on them.

``ev_bound`` is the expectation-value bound ``kappa / (nu gap)``, ``cr_bound``
the Cramer-Rao bound ``1 / (sqrt(nu) dH)``. Divergent bounds are ``math.inf``
in memory; serializers write them as the string ``"divergent"``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import KappaResult
from .errors import OutOfDomain, QBoundError, ZeroRmse
from .estimation import cramer_rao
from .speed_limit import BETA_SQUARED, AlphaModel, alpha, beta


class Verdict(str, enum.Enum):
    SATISFIED = "Satisfied"
    VIOLATED = "Violated"


@dataclass(frozen=True)
class BoundReport:
    nu: int
    cr_bound: float
    ev_bound: float
    envelope: float
    kappa_used: KappaResult
    gap: float
    delta_h: float


def ev_bound(nu: int, gap: float, kappa: KappaResult) -> float:
    """``kappa / (nu gap)``; ``inf`` when the gap is zero."""
    if nu < 1:
        raise QBoundError("nu must be a positive integer")
    if gap < 0:
        raise QBoundError("gap must be non-negative")
    if gap == 0:
        return math.inf
    return kappa.kappa / (nu * gap)


def bound_report(nu: int, gap: float, delta_h: float, kappa: KappaResult,
                 qfi_convention: int = 1) -> BoundReport:
    cr = cramer_rao(nu, delta_h, qfi_convention)
    ev = ev_bound(nu, gap, kappa)
    return BoundReport(nu, cr, ev, max(cr, ev), kappa, gap, delta_h)


@dataclass(frozen=True)
class ForbiddenRegion:
    reports: list
    crossover: float
    first_cr_dominant: int | None

    def __iter__(self):
        return iter(self.reports)

    def __len__(self) -> int:
        return len(self.reports)


def crossover_nu(gap: float, delta_h: float, kappa: KappaResult) -> float:
    """The ``nu`` where the two bounds coincide: ``(kappa dH / gap)^2``."""
    if gap == 0:
        return math.inf
    return (kappa.kappa * delta_h / gap) ** 2


def forbidden_region(nu_range, gap: float, delta_h: float, kappa: KappaResult) -> ForbiddenRegion:
    """Per-``nu`` bound reports and the crossover between the two bounds."""
    if gap <= 0 or delta_h <= 0:
        raise QBoundError("forbidden_region needs gap > 0 and delta_h > 0")
    reports = [bound_report(int(nu), gap, delta_h, kappa) for nu in nu_range]
    first = next((r.nu for r in reports if r.cr_bound >= r.ev_bound), None)
    return ForbiddenRegion(reports, crossover_nu(gap, delta_h, kappa), first)


def averaged_bound_check(delta_x_at_x: float, delta_x_at_xp: float, nu: int, gap: float,
                         kappa_biased: KappaResult) -> Verdict:
    """Whether the RMSE averaged over two separated parameter values respects the bound.

    The caller is responsible for the two points being separated by
    ``(lambda + 1)`` times the summed RMSEs.
    """
    if delta_x_at_x <= 0 or delta_x_at_xp <= 0:
        raise ZeroRmse("both RMSE values must be strictly positive")
    bound = ev_bound(nu, gap, kappa_biased)
    avg = 0.5 * (delta_x_at_x + delta_x_at_xp)
    return Verdict.SATISFIED if avg >= bound else Verdict.VIOLATED


@dataclass(frozen=True)
class ChainCheck:
    lam: float
    lhs: float
    rhs: float
    holds: bool
    alpha_model: str


def chain_rhs(lam: float, nu: int, gap: float, delta_h: float,
              model: AlphaModel = BETA_SQUARED) -> float:
    f = 4.0 / lam**2
    if f >= 1.0:
        return 0.0
    branches = []
    if gap > 0:
        branches.append(alpha(f, model) / (nu * gap))
    if delta_h > 0:
        branches.append(beta(f) / (math.sqrt(nu) * delta_h))
    if not branches:
        return math.inf
    return 0.5 * math.pi * max(branches)


def chain_inequality(lam: float, delta_x: float, delta_x_p: float, nu: int, gap: float,
                     delta_h: float, model: AlphaModel = BETA_SQUARED,
                     biased: bool = True) -> ChainCheck:
    """Left side is the parameter separation implied by the RMSEs at ``lam``.

    Biased: ``(lam + 1)(dX + dX')``. Unbiased: ``lam (dX + dX')``, which is
    ``2 lam dX`` for equal RMSEs. The right side is the speed-limit separation
    evaluated at the fidelity ceiling ``4 / lam^2``.
    """
    if lam <= 1:
        raise OutOfDomain("lambda must exceed 1")
    total = delta_x + delta_x_p
    lhs = (lam + 1.0) * total if biased else lam * total
    rhs = chain_rhs(lam, nu, gap, delta_h, model)
    return ChainCheck(lam, lhs, rhs, lhs >= rhs, model.label)


@dataclass(frozen=True)
class AccuracyProfile:
    """``PowerLaw``: ``dX = coefficient / (nu <H>)^gamma``; ``UserTable``: samples.

    ``table`` maps ``(x, z)`` with ``z = nu <H>`` to ``dX``.
    """

    form: str = "PowerLaw"
    coefficient: float = 1.0
    gamma: float = 1.0
    table: dict | None = None

    def __post_init__(self):
        if self.form == "PowerLaw":
            if self.coefficient <= 0 or self.gamma <= 0:
                raise QBoundError("power law needs positive coefficient and gamma")
        elif self.form == "UserTable":
            if not self.table:
                raise QBoundError("user table profile needs samples")
        else:
            raise QBoundError(f"unknown profile form {self.form!r}")


@dataclass(frozen=True)
class ProfileAnalysis:
    incompatible: list
    assumptions: list = field(default_factory=list)


_SEPARATION_ASSUMPTION = (
    "pairs of parameter values separated by (lambda+1)(dX + dX') are assumed to exist"
)


def accuracy_profile_analysis(profile: AccuracyProfile, mean_h: float, gap: float, nu_range,
                              kappa: KappaResult) -> ProfileAnalysis:
    """List the ``nu`` at which the profile beats the averaged bound.

    For a table, the two smallest errors at distinct ``x`` for the matching
    ``z`` are averaged; the separation between those ``x`` is not verified.
    """
    out = []
    for nu in nu_range:
        nu = int(nu)
        bound = ev_bound(nu, gap, kappa)
        z = nu * mean_h
        if profile.form == "PowerLaw":
            best = profile.coefficient / z**profile.gamma
        else:
            errs = sorted(v for (x, zz), v in profile.table.items()
                          if math.isclose(zz, z, rel_tol=1e-12, abs_tol=1e-12))
            if not errs:
                continue
            best = 0.5 * (errs[0] + errs[1]) if len(errs) > 1 else errs[0]
        if best < bound:
            out.append(nu)
    return ProfileAnalysis(out, [_SEPARATION_ASSUMPTION])


def envelope_is_monotone(reports) -> bool:
    env = np.array([r.envelope for r in reports])
    return bool(np.all(np.diff(env) <= 0))
