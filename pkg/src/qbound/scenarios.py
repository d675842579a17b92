"""Built-in scenarios: qubit phase, truncated coherent state, (|0> + |N>)/sqrt 2, custom.

The interferometric generator is represented by a single-mode number
operator ``diag(0, 1, ..., n)``; every bound quantity depends only on its
spectrum on the probe's support.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import BadSpec, TruncationInsufficient
from .estimation import EstimatorMap, Povm, Strategy
from .states import Generator, QuantumState

QUBIT = "QubitPhase"
COHERENT = "TruncatedCoherentPhase"
ZERO_N = "ZeroNSuperposition"
CUSTOM = "Custom"
KINDS = (QUBIT, COHERENT, ZERO_N, CUSTOM)

LINEAR = "LinearReadout"
ML = "MlInversion"
TABLE = "UserTable"
ESTIMATORS = (LINEAR, ML, TABLE)

TAIL_MASS = 1e-9
NORM_DEFICIT_MAX = 1e-8


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    parameters: dict = field(default_factory=dict)
    nu: int = 1
    estimator_kind: str = ML

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BadSpec(f"unknown scenario kind {self.kind!r}")
        if self.estimator_kind not in ESTIMATORS:
            raise BadSpec(f"unknown estimator kind {self.estimator_kind!r}")
        if not isinstance(self.nu, int) or isinstance(self.nu, bool) or self.nu < 1:
            raise BadSpec("nu must be a positive integer")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioSpec":
        if not isinstance(data, dict) or "kind" not in data:
            raise BadSpec("scenario must be an object with a 'kind'")
        unknown = set(data) - {"kind", "parameters", "nu", "estimator_kind"}
        if unknown:
            raise BadSpec(f"unknown scenario fields {sorted(unknown)}")
        return cls(data["kind"], dict(data.get("parameters", {})), data.get("nu", 1),
                   data.get("estimator_kind", ML))

    @classmethod
    def from_json(cls, path) -> "ScenarioSpec":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise BadSpec(f"scenario file is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def with_nu(self, nu: int) -> "ScenarioSpec":
        return ScenarioSpec(self.kind, dict(self.parameters), int(nu), self.estimator_kind)


def _param(spec: ScenarioSpec, name: str, default=None):
    if name in spec.parameters:
        return spec.parameters[name]
    if default is None:
        raise BadSpec(f"{spec.kind} needs parameter {name!r}")
    return default


def _two_level_estimator(kind: str, n: int, nu: int, table=None) -> EstimatorMap:
    """Estimators for statistics ``P(+) = cos^2(n x / 2)`` on labels ``+``/``-``."""
    if kind == ML:
        def fn(counts, labels):
            k = counts[:, labels.index("+")]
            return (2.0 / n) * np.arccos(np.sqrt(k / nu))
        return EstimatorMap.from_counts(fn, "ml-inversion")
    if kind == LINEAR:
        mid = 0.5 * math.pi / n
        readout = {"+": mid - 1.0 / n, "-": mid + 1.0 / n}
        return EstimatorMap.linear_readout(readout, name="linear-readout", default=mid)
    return _table_estimator(table, nu)


def _table_estimator(table, nu: int) -> EstimatorMap:
    """``UserTable``: keys are outcome labels, or space-separated tuples for ``nu > 1``."""
    if not isinstance(table, dict) or not table:
        raise BadSpec("UserTable needs a non-empty 'estimates' object")
    out = {}
    for key, value in table.items():
        parts = str(key).split()
        out[tuple(parts) if nu > 1 else str(key)] = float(value)
    return EstimatorMap.from_table(out, name="user-table")


def _qubit(spec: ScenarioSpec) -> Strategy:
    probe = QuantumState.pure(np.array([1.0, 1.0]) / math.sqrt(2.0))
    gen = Generator.diagonal([0.0, 1.0])
    plus = np.array([1.0, 1.0]) / math.sqrt(2.0)
    minus = np.array([1.0, -1.0]) / math.sqrt(2.0)
    povm = Povm.projective(np.column_stack([plus, minus]), ("+", "-"))
    est = _two_level_estimator(spec.estimator_kind, 1, spec.nu, spec.parameters.get("estimates"))
    return Strategy(probe, gen, povm, est, spec.nu)


def _zero_n(spec: ScenarioSpec) -> Strategy:
    n = int(_param(spec, "N"))
    if n < 1:
        raise BadSpec("N must be a positive integer")
    d = n + 1
    psi = np.zeros(d)
    psi[0] = psi[n] = 1.0 / math.sqrt(2.0)
    elements, labels = [], []
    for sign, lab in ((1.0, "+"), (-1.0, "-")):
        v = np.zeros(d)
        v[0], v[n] = 1.0 / math.sqrt(2.0), sign / math.sqrt(2.0)
        elements.append(np.outer(v, v))
        labels.append(lab)
    for k in range(1, n):
        e = np.zeros((d, d))
        e[k, k] = 1.0
        elements.append(e)
        labels.append(f"n{k}")
    povm = Povm(tuple(elements), tuple(labels))
    est = _two_level_estimator(spec.estimator_kind, n, spec.nu, spec.parameters.get("estimates"))
    return Strategy(QuantumState.pure(psi), Generator.diagonal(np.arange(d)), povm, est, spec.nu)


def default_truncation(mean_n: float, tail: float = TAIL_MASS) -> int:
    """Smallest ``n_max`` whose Poisson tail beyond it has mass <= ``tail``."""
    if mean_n == 0:
        return 1
    n = int(stats.poisson.isf(tail, mean_n))
    while stats.poisson.sf(n, mean_n) > tail:
        n += 1
    while n > 1 and stats.poisson.sf(n - 1, mean_n) <= tail:
        n -= 1
    return max(n, 1)


def coherent_amplitudes(mean_n: float, n_max: int) -> tuple[np.ndarray, float]:
    """Normalized truncated amplitudes and the norm deficit of the truncation."""
    n = np.arange(n_max + 1)
    w = stats.poisson.pmf(n, mean_n)
    deficit = float(stats.poisson.sf(n_max, mean_n))
    amp = np.sqrt(w)
    return amp / np.linalg.norm(amp), deficit


def _coherent(spec: ScenarioSpec) -> Strategy:
    mean_n = float(_param(spec, "alpha2"))
    if mean_n < 0:
        raise BadSpec("alpha2 must be non-negative")
    n_max = int(spec.parameters.get("n_max", default_truncation(mean_n)))
    if n_max < 1:
        raise BadSpec("n_max must be at least 1")
    amp, deficit = coherent_amplitudes(mean_n, n_max)
    if deficit > NORM_DEFICIT_MAX:
        raise TruncationInsufficient(
            f"n_max = {n_max} leaves norm deficit {deficit:.3g} for |alpha|^2 = {mean_n}")
    d = n_max + 1
    # phase basis |theta_k> = sum_n exp(i n theta_k) |n> / sqrt(d)
    theta = 2.0 * math.pi * np.arange(d) / d
    basis = np.exp(1j * np.outer(np.arange(d), theta)) / math.sqrt(d)
    labels = tuple(f"k{k}" for k in range(d))
    povm = Povm.projective(basis, labels)
    # outcome k points at x = -theta_k, reported in (-pi, pi]
    phase = {lab: float(np.angle(np.exp(-1j * t))) for lab, t in zip(labels, theta)}
    if spec.estimator_kind == ML:
        est = _circular_mean_estimator(np.array([phase[lab] for lab in labels]))
    elif spec.estimator_kind == LINEAR:
        est = EstimatorMap.linear_readout(phase, name="linear-readout")
    else:
        est = _table_estimator(spec.parameters.get("estimates"), spec.nu)
    return Strategy(QuantumState.pure(amp), Generator.diagonal(np.arange(d)), povm, est, spec.nu)


def _circular_mean_estimator(phases: np.ndarray) -> EstimatorMap:
    unit = np.exp(1j * phases)

    def fn(counts, labels):
        return np.angle(counts @ unit)

    return EstimatorMap.from_counts(fn, "circular-mean")


def _complex_array(data, name: str) -> np.ndarray:
    """Nested lists whose innermost entries are ``[re, im]`` pairs (or plain reals)."""
    try:
        a = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise BadSpec(f"{name} must be numeric") from None
    if a.ndim >= 1 and a.shape[-1] == 2 and a.ndim in (2, 3):
        return a[..., 0] + 1j * a[..., 1]
    raise BadSpec(f"{name} must be given as [re, im] pairs")


def _custom(spec: ScenarioSpec) -> Strategy:
    probe_data = _complex_array(_param(spec, "probe"), "probe")
    if probe_data.ndim == 1:
        probe = QuantumState.pure(probe_data)
    else:
        probe = QuantumState.mixed(probe_data)
    gen = Generator(_complex_array(_param(spec, "generator"), "generator"))
    raw = _param(spec, "povm")
    elements = tuple(_complex_array(e, "povm element") for e in raw)
    labels = tuple(str(v) for v in spec.parameters.get("labels", range(len(elements))))
    povm = Povm(elements, labels)
    if spec.estimator_kind == LINEAR:
        readout = {str(k): float(v) for k, v in _param(spec, "readout").items()}
        est = EstimatorMap.linear_readout(readout, name="linear-readout")
    elif spec.estimator_kind == TABLE:
        est = _table_estimator(spec.parameters.get("estimates"), spec.nu)
    else:
        raise BadSpec("Custom scenarios support LinearReadout or UserTable estimators")
    return Strategy(probe, gen, povm, est, spec.nu)


_BUILDERS = {QUBIT: _qubit, COHERENT: _coherent, ZERO_N: _zero_n, CUSTOM: _custom}


def build_scenario(spec: ScenarioSpec) -> Strategy:
    return _BUILDERS[spec.kind](spec)
