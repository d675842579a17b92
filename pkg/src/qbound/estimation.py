"""POVM statistics, estimators, RMSE decomposition and Cramer-Rao quantities.

Joint statistics of ``nu`` copies are never built from the ``d**nu``
dimensional state when the POVM acts copy by copy. Outcomes are either
``nu``-tuples of per-copy labels (product probabilities) or, for estimators
that only depend on how often each per-copy outcome occurred, count vectors
with multinomial weights.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterator, Mapping

import numpy as np
from scipy.special import gammaln

from .errors import (
    CombinatorialOverflow,
    DimensionMismatch,
    MissingEstimate,
    NotPure,
    OutcomeMismatch,
    QBoundError,
    Unnormalized,
    ZeroRmse,
)
from .linalg import PSD_CLIP, as_matrix, hermitian_eig, is_hermitian
from .states import Generator, QuantumState, evolve, moments, tensor_power

COMPLETENESS_TOL = 1e-9
PROB_CLIP = 1e-12
NORM_TOL = 1e-9
DEFAULT_CAP = 10**7

PER_COPY = "per_copy_product"
JOINT = "joint_explicit"

SINGLE = "single"
TUPLES = "tuples"
COUNTS = "counts"


@dataclass(frozen=True, eq=False)
class Povm:
    elements: tuple
    labels: tuple

    def __post_init__(self):
        elements = tuple(as_matrix(e) for e in self.elements)
        labels = tuple(self.labels) if self.labels is not None else tuple(range(len(elements)))
        if len(labels) != len(elements) or not elements:
            raise QBoundError("POVM needs one label per element")
        if len(set(labels)) != len(labels):
            raise QBoundError("POVM labels must be distinct")
        dim = elements[0].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for e in elements:
            if e.shape != (dim, dim):
                raise DimensionMismatch("POVM elements differ in dimension")
            if not is_hermitian(e):
                raise QBoundError("POVM element is not Hermitian")
            if hermitian_eig(e).eigenvalues[0] < -PSD_CLIP:
                raise QBoundError("POVM element is not positive semidefinite")
            total += e
        if np.max(np.abs(total - np.eye(dim))) > COMPLETENESS_TOL:
            raise QBoundError("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @classmethod
    def projective(cls, basis, labels=None) -> "Povm":
        """Rank-one projectors on the columns of ``basis``."""
        b = np.asarray(basis, dtype=complex)
        elements = [np.outer(b[:, k], b[:, k].conj()) for k in range(b.shape[1])]
        return cls(tuple(elements), labels)

    def probabilities(self, state: QuantumState) -> np.ndarray:
        if state.dim != self.dim:
            raise DimensionMismatch(f"POVM dim {self.dim} vs state dim {state.dim}")
        # Tr(E rho) = sum_ij E_ji rho_ij
        p = np.array([np.real(np.sum(e.T * state.rho)) for e in self.elements])
        return _clean_probabilities(p)


def _clean_probabilities(p: np.ndarray) -> np.ndarray:
    if np.any(p < -PROB_CLIP):
        raise Unnormalized(f"negative probability {p.min():.3e}")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > NORM_TOL:
        raise Unnormalized(f"probabilities sum to {total!r}")
    return p


@dataclass(frozen=True, eq=False)
class Distribution:
    """Outcome probabilities with their labels.

    ``kind`` is ``"single"`` (labels are POVM labels), ``"tuples"`` (labels are
    ``nu``-tuples of per-copy labels) or ``"counts"`` (labels are tuples of
    per-copy outcome counts ordered as ``copy_labels``).
    """

    labels: tuple
    probs: np.ndarray
    kind: str = SINGLE
    nu: int = 1
    copy_labels: tuple = ()

    def __len__(self) -> int:
        return len(self.labels)

    def items(self):
        return zip(self.labels, self.probs)

    def same_outcomes(self, other: "Distribution") -> bool:
        return self.kind == other.kind and self.labels == other.labels


CountsFn = Callable[[np.ndarray, tuple], np.ndarray]


@dataclass(frozen=True, eq=False)
class EstimatorMap:
    """Assigns an estimate ``x_j`` to every outcome.

    One of: an explicit ``table`` (outcome label -> value); a ``counts_fn``
    mapping an ``(n, m)`` array of per-copy outcome counts, columns ordered as
    the POVM labels, to ``n`` estimates; or a vectorized ``label_fn`` for
    numeric outcome labels.
    """

    table: Mapping[Hashable, float] | None = None
    counts_fn: CountsFn | None = None
    name: str = "user-table"
    label_fn: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        given = sum(v is not None for v in (self.table, self.counts_fn, self.label_fn))
        if given != 1:
            raise QBoundError("give exactly one of table, counts_fn or label_fn")

    @classmethod
    def from_table(cls, table: Mapping[Hashable, float], name: str = "user-table") -> "EstimatorMap":
        return cls(table=dict(table), name=name)

    @classmethod
    def linear_readout(cls, readout: Mapping[Hashable, float], scale: float = 1.0,
                       offset: float = 0.0, name: str = "linear-readout",
                       default: float | None = None) -> "EstimatorMap":
        """``offset + scale * mean(readout[j])`` over the ``nu`` per-copy outcomes.

        Outcomes missing from ``readout`` take ``default``; without one they
        raise :class:`MissingEstimate`.
        """
        readout = dict(readout)

        def fn(counts, labels):
            try:
                r = np.array([readout[lab] if default is None else readout.get(lab, default)
                              for lab in labels], dtype=float)
            except KeyError as exc:
                raise MissingEstimate(f"no readout value for outcome {exc.args[0]!r}") from None
            nu = counts.sum(axis=1)
            return offset + scale * (counts @ r) / nu

        return cls(counts_fn=fn, name=name)

    @classmethod
    def from_counts(cls, fn: CountsFn, name: str) -> "EstimatorMap":
        return cls(counts_fn=fn, name=name)

    @classmethod
    def affine_in_label(cls, scale: float, offset: float, name: str = "affine") -> "EstimatorMap":
        """``offset + scale * label`` for numeric outcome labels."""
        return cls(label_fn=lambda labels: offset + scale * labels, name=name)

    @property
    def uses_counts(self) -> bool:
        return self.counts_fn is not None

    def values_for(self, dist: Distribution) -> np.ndarray:
        if self.label_fn is not None:
            return np.asarray(self.label_fn(np.asarray(dist.labels, dtype=float)), dtype=float)
        if self.table is not None:
            out = np.empty(len(dist.labels))
            for i, lab in enumerate(dist.labels):
                try:
                    out[i] = self.table[lab]
                except KeyError:
                    raise MissingEstimate(f"no estimate for outcome {lab!r}") from None
            return out
        counts = _counts_matrix(dist)
        return np.asarray(self.counts_fn(counts, dist.copy_labels), dtype=float)


def _counts_matrix(dist: Distribution) -> np.ndarray:
    if dist.kind == COUNTS:
        return np.array(dist.labels, dtype=np.int64).reshape(len(dist.labels), -1)
    if not dist.copy_labels:
        raise MissingEstimate("counts-based estimator needs per-copy outcome labels")
    index = {lab: k for k, lab in enumerate(dist.copy_labels)}
    m = len(dist.copy_labels)
    out = np.zeros((len(dist.labels), m), dtype=np.int64)
    for i, lab in enumerate(dist.labels):
        outcomes = lab if dist.kind == TUPLES else (lab,)
        for o in outcomes:
            if o not in index:
                raise MissingEstimate(f"outcome {o!r} is not a per-copy label")
            out[i, index[o]] += 1
    return out


@dataclass(frozen=True, eq=False)
class Strategy:
    probe: QuantumState
    gen: Generator
    povm: Povm
    estimator: EstimatorMap
    nu: int = 1
    povm_scope: str = PER_COPY

    def __post_init__(self):
        if self.nu < 1:
            raise QBoundError("nu must be a positive integer")
        if self.probe.dim != self.gen.dim:
            raise DimensionMismatch("probe and generator dimensions differ")
        if self.povm_scope == PER_COPY:
            if self.povm.dim != self.probe.dim:
                raise DimensionMismatch("per-copy POVM must act on one probe")
        elif self.povm_scope == JOINT:
            if self.povm.dim != self.probe.dim**self.nu:
                raise DimensionMismatch("joint POVM must act on dim**nu")
        else:
            raise QBoundError(f"unknown POVM scope {self.povm_scope!r}")


@dataclass(frozen=True)
class RmseReport:
    delta_x: float
    small_delta_x: float
    x_bar: float
    bias: float
    x_true: float


def compositions(nu: int, m: int) -> np.ndarray:
    """All count vectors of length ``m`` summing to ``nu``, lexicographic order."""
    rows = []
    for bars in itertools.combinations(range(nu + m - 1), m - 1):
        prev = -1
        row = []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(nu + m - 2 - prev)
        rows.append(row)
    return np.array(rows, dtype=np.int64).reshape(-1, m)


def n_compositions(nu: int, m: int) -> int:
    return math.comb(nu + m - 1, m - 1)


def multinomial_probs(counts: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Multinomial pmf of each row of ``counts`` under per-copy probabilities ``p``."""
    nu = counts.sum(axis=1)
    log_coef = gammaln(nu + 1) - gammaln(counts + 1).sum(axis=1)
    logp = np.log(np.maximum(p, 1e-300))
    with np.errstate(invalid="ignore"):
        terms = np.where(counts > 0, counts * logp, 0.0)
    out = np.exp(log_coef + terms.sum(axis=1))
    out[np.any((counts > 0) & (p <= 0), axis=1)] = 0.0
    return out


def n_joint_outcomes(strategy: Strategy, aggregate: str | None = None) -> int:
    m = len(strategy.povm.labels)
    if strategy.povm_scope == JOINT or strategy.nu == 1:
        return m
    kind = aggregate or (COUNTS if strategy.estimator.uses_counts else TUPLES)
    return n_compositions(strategy.nu, m) if kind == COUNTS else m**strategy.nu


def outcome_distribution(strategy: Strategy, x: float, aggregate: str | None = None,
                         cap: int = DEFAULT_CAP) -> Distribution:
    """Probabilities of the joint outcomes when the true parameter is ``x``.

    ``aggregate`` picks ``"tuples"`` or ``"counts"`` for per-copy POVMs with
    ``nu > 1``; by default counts are used whenever the estimator allows it.
    """
    labels = strategy.povm.labels
    rho_x = evolve(strategy.probe, strategy.gen, x)
    if strategy.povm_scope == JOINT:
        joint = tensor_power(rho_x, strategy.nu)
        return Distribution(labels, strategy.povm.probabilities(joint), SINGLE, strategy.nu, ())
    p = strategy.povm.probabilities(rho_x)
    if strategy.nu == 1:
        return Distribution(labels, p, SINGLE, 1, labels)
    size = n_joint_outcomes(strategy, aggregate)
    if size > cap:
        raise CombinatorialOverflow(f"{size} joint outcomes exceed the cap {cap}")
    kind = aggregate or (COUNTS if strategy.estimator.uses_counts else TUPLES)
    return per_copy_distribution(p, labels, strategy.nu, kind)


def per_copy_distribution(p: np.ndarray, labels: tuple, nu: int, kind: str) -> Distribution:
    m = len(labels)
    if kind == COUNTS:
        counts = compositions(nu, m)
        probs = multinomial_probs(counts, p)
        return Distribution(tuple(map(tuple, counts.tolist())), probs, COUNTS, nu, tuple(labels))
    if kind == TUPLES:
        tuples = list(itertools.product(range(m), repeat=nu))
        idx = np.array(tuples, dtype=np.int64).reshape(len(tuples), nu)
        probs = np.prod(p[idx], axis=1)
        joint = tuple(tuple(labels[k] for k in t) for t in tuples)
        return Distribution(joint, probs, TUPLES, nu, tuple(labels))
    raise QBoundError(f"unknown aggregate {kind!r}")


def iter_outcomes(strategy: Strategy, x: float) -> Iterator[tuple[tuple, float]]:
    """Stream ``(nu-tuple, probability)`` pairs without materializing them."""
    rho_x = evolve(strategy.probe, strategy.gen, x)
    if strategy.povm_scope == JOINT:
        joint = tensor_power(rho_x, strategy.nu)
        yield from zip(strategy.povm.labels, strategy.povm.probabilities(joint))
        return
    p = strategy.povm.probabilities(rho_x)
    labels = strategy.povm.labels
    for t in itertools.product(range(len(labels)), repeat=strategy.nu):
        yield tuple(labels[k] for k in t), float(np.prod(p[list(t)]))


def rmse_report(dist: Distribution, estimator: EstimatorMap, x_true: float) -> RmseReport:
    """RMSE ``dX``, spread ``delta X``, mean estimate and bias."""
    values = estimator.values_for(dist)
    return rmse_from_values(dist.probs, values, x_true)


def rmse_from_values(probs: np.ndarray, values: np.ndarray, x_true: float) -> RmseReport:
    probs = np.asarray(probs, dtype=float)
    values = np.asarray(values, dtype=float)
    x_bar = float(probs @ values)
    spread2 = float(probs @ (values - x_bar) ** 2)
    bias = x_bar - x_true
    delta2 = float(probs @ (values - x_true) ** 2)
    return RmseReport(math.sqrt(max(delta2, 0.0)), math.sqrt(max(spread2, 0.0)), x_bar, bias, x_true)


def qfi_pure(probe: QuantumState, gen: Generator, convention: int = 1) -> float:
    """Quantum Fisher information of a pure probe, ``convention * (Delta H)^2``.

    ``convention=1`` keeps Q equal to the variance of H; ``convention=4`` is
    the common normalization in which Q = 4 (Delta H)^2.
    """
    if not probe.is_pure:
        raise NotPure("qfi_pure needs a pure probe")
    if convention not in (1, 4):
        raise QBoundError("QFI convention must be 1 or 4")
    return convention * moments(probe, gen)[1]


def cramer_rao(nu: int, delta_h: float, convention: int = 1) -> float:
    """``1 / sqrt(nu * convention * delta_h**2)``; ``inf`` when ``delta_h`` is 0."""
    if nu < 1:
        raise QBoundError("nu must be a positive integer")
    if delta_h < 0:
        raise QBoundError("delta_h must be non-negative")
    if delta_h == 0:
        return math.inf
    return 1.0 / (math.sqrt(nu * convention) * delta_h)


def check_same_outcomes(p: Distribution, q: Distribution) -> None:
    if not p.same_outcomes(q):
        raise OutcomeMismatch("distributions are over different outcome sets")


def require_positive_rmse(*values: float) -> None:
    if any(v <= 0 for v in values):
        raise ZeroRmse("RMSE must be strictly positive")


def distribution_rows(dist: Distribution) -> list[tuple[str, float]]:
    return [(_label_text(lab), float(p)) for lab, p in dist.items()]


def _label_text(label) -> str:
    if isinstance(label, tuple):
        return " ".join(str(v) for v in label)
    return str(label)


__all__ = [
    "COUNTS", "JOINT", "PER_COPY", "SINGLE", "TUPLES",
    "Distribution", "EstimatorMap", "Povm", "RmseReport", "Strategy",
    "compositions", "cramer_rao", "iter_outcomes", "multinomial_probs",
    "outcome_distribution", "per_copy_distribution", "qfi_pure", "rmse_from_values",
    "rmse_report",
]
