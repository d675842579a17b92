"""Step-by-step numerical check of the fidelity lemma behind the bound.

Given two parameter values ``x, x'`` whose separation equals
``(lambda + 1)(dX + dX')`` (or ``lambda (dX + dX')`` for unbiased estimators),
the Bhattacharyya coefficient of the two outcome distributions satisfies
``BC^2 <= 4 / lambda^2``. :func:`verify_chain` recomputes each intermediate
inequality of that argument on a concrete instance and reports its margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sp_fft
from scipy import optimize

from .errors import OutcomeMismatch, PreconditionFailed
from .estimation import SINGLE, Distribution, EstimatorMap, Povm, rmse_from_values
from .linalg import hermitian_eig, random_psd, random_unitary
from .rng import substream
from .states import Generator, QuantumState, evolve, joint_fidelity

STEP_TOL = 1e-9
SEPARATION_TOL = 1e-9
MEMBERSHIP_TOL = 1e-12
POSITIVE_RMSE = 1e-12
WINDOW = 4.0 * math.pi
SCAN_POINTS = 256
READOUT_SPAN = 3
MAX_COPIES = 2000


def bhattacharyya(p: Distribution, q: Distribution) -> float:
    """``sum_j sqrt(p_j q_j)`` clipped to [0, 1]."""
    if not p.same_outcomes(q):
        raise OutcomeMismatch("distributions are over different outcome sets")
    value = float(np.sum(np.sqrt(p.probs * q.probs)))
    return min(max(value, 0.0), 1.0)


def inlier_mask(values: np.ndarray, x_bar_prime: float, delta_x_prime: float, lam: float) -> np.ndarray:
    """Outcomes with ``|x_j - x_bar'| <= lam * deltaX'`` (boundary included)."""
    values = np.asarray(values, dtype=float)
    tol = MEMBERSHIP_TOL * (1.0 + max(abs(x_bar_prime), float(np.max(np.abs(values), initial=0.0))))
    return np.abs(values - x_bar_prime) <= lam * delta_x_prime + tol


def inlier_set(labels, values, x_bar_prime: float, delta_x_prime: float, lam: float) -> set:
    mask = inlier_mask(values, x_bar_prime, delta_x_prime, lam)
    return {lab for lab, keep in zip(labels, mask) if keep}


def chebyshev_tail_mass(probs, values, lam: float) -> float:
    """Probability of landing at least ``lam`` standard deviations from the mean."""
    probs = np.asarray(probs, dtype=float)
    values = np.asarray(values, dtype=float)
    mean = float(probs @ values)
    sigma = math.sqrt(max(float(probs @ (values - mean) ** 2), 0.0))
    dev = np.abs(values - mean)
    if sigma == 0.0:
        return float(probs[dev > 0].sum())
    return float(probs[dev >= lam * sigma].sum())


@dataclass(frozen=True, eq=False)
class LemmaInstance:
    x: float
    x_prime: float
    dist_x: Distribution
    dist_xp: Distribution
    estimator: EstimatorMap
    lam: float
    biased: bool = True
    state_pair: tuple | None = None
    nu: int = 1
    dim: int = 0
    seed: int | None = None
    index: int | None = None


@dataclass(frozen=True)
class Rejected:
    reason: str
    seed: int
    index: int
    lam: float


@dataclass(frozen=True)
class ChainReport:
    bhattacharyya: float
    inlier_mass_x: float
    outlier_mass_xp: float
    classical_fidelity_bound: float
    quantum_fidelity: float | None
    lam: float
    all_steps_hold: bool
    margins: dict = field(default_factory=dict)


def _separation_factor(lam: float, biased: bool) -> float:
    return lam + 1.0 if biased else lam


def validate(instance: LemmaInstance):
    """Check the instance preconditions; returns the two RMSE reports."""
    for name, d in (("x", instance.dist_x), ("x'", instance.dist_xp)):
        if abs(float(d.probs.sum()) - 1.0) > 1e-9 or np.any(d.probs < 0):
            raise PreconditionFailed("normalization", f"distribution at {name} is not normalized")
    if not instance.dist_x.same_outcomes(instance.dist_xp):
        raise OutcomeMismatch("distributions are over different outcome sets")
    if instance.lam <= 1:
        raise PreconditionFailed("dist", "lambda must exceed 1")
    values = instance.estimator.values_for(instance.dist_x)
    rx = rmse_from_values(instance.dist_x.probs, values, instance.x)
    rxp = rmse_from_values(instance.dist_xp.probs, values, instance.x_prime)
    if not rx.delta_x > POSITIVE_RMSE:
        raise PreconditionFailed("pos", f"RMSE at x is {rx.delta_x:.3e}")
    sep = abs(instance.x - instance.x_prime)
    target = _separation_factor(instance.lam, instance.biased) * (rx.delta_x + rxp.delta_x)
    if abs(sep - target) > SEPARATION_TOL * (1.0 + sep):
        raise PreconditionFailed("dist", f"|x - x'| = {sep:.12g} but the condition needs {target:.12g}")
    if not instance.biased:
        for r in (rx, rxp):
            if abs(r.bias) > SEPARATION_TOL * (1.0 + abs(r.x_true)):
                raise PreconditionFailed("unbiased", f"bias {r.bias:.3e} at x = {r.x_true:.12g}")
    return values, rx, rxp


def verify_chain(instance: LemmaInstance) -> ChainReport:
    """Evaluate every inequality of the lemma on one instance."""
    values, rx, rxp = validate(instance)
    lam = instance.lam
    p = instance.dist_x.probs
    q = instance.dist_xp.probs
    bound = 1.0 / lam**2
    scale = 1.0 + abs(instance.x) + abs(instance.x_prime) + float(np.max(np.abs(values)))
    margins = {}

    mask = inlier_mask(values, rxp.x_bar, rxp.small_delta_x, lam)
    outlier_xp = float(q[~mask].sum())
    inlier_x = float(p[mask].sum())
    margins["outlier_mass_xp"] = bound - outlier_xp

    mean_sep = abs(rx.x_bar - rxp.x_bar)
    margins["mean_separation"] = (mean_sep - lam * (rx.delta_x + rxp.delta_x)) / scale

    if mask.any():
        closest = float(np.min(np.abs(rx.x_bar - values[mask])))
        margins["inlier_distance"] = (closest - lam * rx.delta_x) / scale
    else:
        margins["inlier_distance"] = 0.0
    margins["spread_below_rmse"] = lam * (rx.delta_x - rx.small_delta_x) / scale
    margins["inlier_mass_x"] = bound - inlier_x

    bc = bhattacharyya(instance.dist_x, instance.dist_xp)
    split = float(np.sum(np.sqrt(p[mask] * q[mask])) + np.sum(np.sqrt(p[~mask] * q[~mask])))
    cauchy = math.sqrt(inlier_x * float(q[mask].sum())) + math.sqrt(float(p[~mask].sum()) * outlier_xp)
    margins["cauchy_schwarz"] = cauchy - split
    margins["mass_drop"] = math.sqrt(inlier_x) + math.sqrt(outlier_xp) - cauchy
    margins["fidelity_bound"] = 4.0 * bound - bc * bc

    qf = None
    if instance.state_pair is not None:
        a, b = instance.state_pair
        qf = joint_fidelity(a, b, instance.nu)
        margins["quantum_fidelity"] = bc * bc - qf

    ok = all(m >= -STEP_TOL for m in margins.values())
    return ChainReport(bc, inlier_x, outlier_xp, bc * bc, qf, lam, ok, margins)


def _random_probe(dim: int, rng: np.random.Generator) -> QuantumState:
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    psi /= np.linalg.norm(psi)
    if rng.random() < 0.5:
        return QuantumState(np.outer(psi, psi.conj()), True)
    noise = random_psd(dim, rng)
    noise /= np.trace(noise).real
    w = rng.uniform(0.0, 0.3)
    rho = (1 - w) * np.outer(psi, psi.conj()) + w * noise
    return QuantumState(0.5 * (rho + rho.conj().T), False)


def _random_povm_elements(dim: int, m: int, rng: np.random.Generator) -> list[np.ndarray]:
    u = random_unitary(dim, rng)
    if m <= dim:
        # Coarse-grained projective measurement: split a random basis into m groups.
        cuts = np.sort(rng.choice(np.arange(1, dim), size=m - 1, replace=False)) if m > 1 else []
        groups = np.split(np.arange(dim), cuts)
        return [u[:, g] @ u[:, g].conj().T for g in groups]
    g = rng.standard_normal((m, dim)) + 1j * rng.standard_normal((m, dim))
    w = [np.outer(v, v.conj()) for v in g]
    eig = hermitian_eig(sum(w))
    s_inv = eig.apply_function(lambda e: 1.0 / np.sqrt(e))
    return [s_inv @ wi @ s_inv for wi in w]


def _int_power(z: np.ndarray, n: int) -> np.ndarray:
    # square-and-multiply; numpy's complex power goes through exp/log and is slower
    out = None
    while n:
        if n & 1:
            out = z.copy() if out is None else out * z
        n >>= 1
        if n:
            z = z * z
    return out


def readout_sum_pmf(p: np.ndarray, readout: np.ndarray, nu: int) -> np.ndarray:
    """Distribution of ``T = sum of nu i.i.d. integer readouts``.

    ``readout`` holds non-negative integers; ``p`` is one per-copy distribution
    or a stack of them (one per row). The result has length
    ``nu * max(readout) + 1``. Computed exactly up to rounding as the inverse
    FFT of the per-copy characteristic function raised to ``nu`` (the support
    fits the transform length, so there is no wrap-around).
    """
    r = np.asarray(readout, dtype=np.int64)
    p = np.atleast_2d(np.asarray(p, dtype=float))
    length = nu * int(r.max()) + 1
    n_fft = sp_fft.next_fast_len(length, real=True)
    single = np.zeros((p.shape[0], n_fft))
    single[:, r] = p
    pmf = sp_fft.irfft(_int_power(sp_fft.rfft(single, axis=1), nu), n=n_fft, axis=1)[:, :length]
    pmf[pmf < 1e-13] = 0.0
    pmf /= pmf.sum(axis=1, keepdims=True)
    return pmf[0] if p.shape[0] == 1 else pmf


class _PairModel:
    """Per-copy statistics of ``rho_{x+s}`` in the eigenbasis of ``H``."""

    def __init__(self, probe: QuantumState, gen: Generator, elements, x: float):
        v = gen.eig.eigenvectors
        self.w = gen.eig.eigenvalues
        rho_x = evolve(probe, gen, x).rho
        self.rho_t = v.conj().T @ rho_x @ v
        self.e_t = np.array([v.conj().T @ e @ v for e in elements])

    def probs(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        diff = self.w[:, None] - self.w[None, :]
        rho_s = self.rho_t[None] * np.exp(-1j * s[:, None, None] * diff[None])
        p = np.real(np.einsum("jlk,skl->sj", self.e_t, rho_s))
        return np.clip(p, 0.0, None)


def random_instance(dim: int, n_outcomes: int, lam: float, seed: int, index: int = 0,
                    biased: bool = True) -> LemmaInstance | Rejected:
    """Random instance meeting the separation condition, or :class:`Rejected`.

    Draws a random probe (pure or mixed), a generator with spectrum in [0, 1],
    a per-copy POVM and strictly increasing integer readout values ``r_j``.
    The joint outcome is the total readout ``T`` over ``nu`` copies (a
    coarse-graining of the product POVM) and the estimate is affine in
    ``T / nu``, calibrated to be unbiased at ``x`` and ``x'``; biased instances
    then get a random gain and offset. The separation is solved by bracketed root finding
    on ``s - c (dX(x) + dX(x + s))`` for ``s`` in ``(0, 4 pi]``.
    """
    rng = substream(seed, "lemma", index)
    probe = _random_probe(dim, rng)
    energies = np.sort(rng.uniform(0.0, 1.0, dim))
    u = random_unitary(dim, rng)
    gen = Generator(u @ np.diag(energies) @ u.conj().T)
    elements = _random_povm_elements(dim, n_outcomes, rng)
    top = READOUT_SPAN * n_outcomes
    readout = np.sort(rng.choice(top + 1, size=n_outcomes, replace=False)).astype(float)
    readout -= readout[0]
    x = float(rng.uniform(0.0, 2.0 * math.pi))
    c = _separation_factor(lam, biased)
    gain = float(rng.uniform(-0.5, 0.5)) / c if biased else 0.0
    shift = float(rng.uniform(-0.5, 0.5)) if biased else 0.0
    copies_margin = float(rng.uniform(1.2, 3.0))

    model = _PairModel(probe, gen, elements, x)
    p0 = model.probs(0.0)[0]
    mu0 = float(p0 @ readout)
    var0 = max(float(p0 @ readout**2) - mu0**2, 0.0)
    grid = np.linspace(WINDOW / SCAN_POINTS, WINDOW, SCAN_POINTS)

    def moments_at(s):
        p1 = model.probs(s)
        mu1 = p1 @ readout
        return mu1, np.clip(p1 @ readout**2 - mu1**2, 0.0, None)

    mu_g, var_g = moments_at(grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(mu_g - mu0) / (np.sqrt(var0) + np.sqrt(var_g))
    ratio = np.where(np.isfinite(ratio), ratio, 0.0)
    best = float(ratio.max())
    if best <= 0:
        return Rejected("readout cannot separate the two states", seed, index, lam)
    nu = max(1, int(math.ceil(copies_margin * (c / best) ** 2)))
    if nu > MAX_COPIES:
        return Rejected(f"would need {nu} copies (cap {MAX_COPIES})", seed, index, lam)

    def affine(s, mu1):
        a = s / (mu1 - mu0)
        b = x - a * mu0
        a_b = a * (1.0 + gain)
        b_b = b - gain * a * 0.5 * (mu0 + mu1) + shift * s / (2.0 * c)
        return a_b, b_b

    def residual(s):
        mu1, var1 = moments_at(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            a, b = affine(s, mu1)
            dx0 = np.sqrt(a**2 * var0 / nu + (a * mu0 + b - x) ** 2)
            dx1 = np.sqrt(a**2 * var1 / nu + (a * mu1 + b - x - s) ** 2)
            r = s - c * (dx0 + dx1)
        return np.where(np.isfinite(r), r, -np.inf)

    res = residual(grid)
    if res[0] > 0:
        return Rejected("separation condition holds at the smallest scanned step", seed, index, lam)
    hits = np.nonzero((res[:-1] < 0) & (res[1:] > 0))[0]
    if hits.size == 0:
        return Rejected("no separation in the parameter window", seed, index, lam)
    k = int(hits[0])
    s = optimize.brentq(lambda t: float(residual(t)[0]), grid[k], grid[k + 1], xtol=1e-14, rtol=1e-15)

    p1 = model.probs(s)[0]
    mu1 = float(p1 @ readout)
    scale, offset = affine(s, mu1)
    pmfs = readout_sum_pmf(np.vstack([p0, p1]), readout.astype(np.int64), nu)
    # totals carrying no mass under either parameter are dropped
    keep = np.nonzero(pmfs.max(axis=0) > 0)[0]
    lo, hi = int(keep[0]), int(keep[-1]) + 1
    pmfs = pmfs[:, lo:hi]
    pmfs /= pmfs.sum(axis=1, keepdims=True)
    estimator = EstimatorMap.affine_in_label(float(scale) / nu, float(offset), name="linear-readout-total")
    labels = tuple(range(lo, hi))
    dist_x = Distribution(labels, pmfs[0], SINGLE, nu, ())
    dist_xp = Distribution(labels, pmfs[1], SINGLE, nu, ())

    pair = (evolve(probe, gen, x), evolve(probe, gen, x + s))
    inst = LemmaInstance(x, x + s, dist_x, dist_xp, estimator, lam, biased, pair, nu, dim, seed, index)
    try:
        validate(inst)
    except PreconditionFailed as exc:
        return Rejected(f"generated instance failed {exc.equation}", seed, index, lam)
    return inst


def instance_povm(dim: int, n_outcomes: int, seed: int, index: int) -> Povm:
    """Rebuild the per-copy POVM of an instance through the validating constructor."""
    rng = substream(seed, "lemma", index)
    _random_probe(dim, rng)
    rng.uniform(0.0, 1.0, dim)
    random_unitary(dim, rng)
    elements = _random_povm_elements(dim, n_outcomes, rng)
    return Povm(tuple(elements), tuple(range(n_outcomes)))


@dataclass(frozen=True)
class BatchResult:
    reports: list
    rejected: list

    @property
    def violations(self) -> int:
        return sum(not r.all_steps_hold for _, r in self.reports)


def draw_config(seed: int, index: int, dims=(2, 4), outcomes=(2, 8), lam_range=(1.1, 10.0)):
    rng = substream(seed, "lemma", index, 0)
    dim = int(rng.integers(dims[0], dims[1] + 1))
    m = int(rng.integers(outcomes[0], outcomes[1] + 1))
    lam = float(rng.uniform(*lam_range))
    return dim, m, lam


def run_batch(n_accepted: int, seed: int, dims=(2, 4), outcomes=(2, 8), lam_range=(1.1, 10.0),
              biased: bool = True, max_attempts: int | None = None) -> BatchResult:
    """Verify instances in index order until ``n_accepted`` pass the preconditions."""
    max_attempts = max_attempts or 50 * n_accepted
    reports, rejected = [], []
    index = 0
    while len(reports) < n_accepted and index < max_attempts:
        dim, m, lam = draw_config(seed, index, dims, outcomes, lam_range)
        inst = random_instance(dim, m, lam, seed, index, biased)
        if isinstance(inst, Rejected):
            rejected.append(inst)
        else:
            reports.append((inst, verify_chain(inst)))
        index += 1
    return BatchResult(reports, rejected)
