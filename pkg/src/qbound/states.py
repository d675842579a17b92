"""Probe states, the unitary encoding ``U_x = exp(-i x H)`` and resource quantities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptySupport, QBoundError
from .linalg import (
    PSD_CLIP,
    EigenDecomposition,
    as_matrix,
    check_psd,
    hermitian_eig,
    is_hermitian,
    psd_sqrt,
    random_psd,
)

TRACE_TOL = 1e-10
PURITY_TOL = 1e-9
DEGENERACY_TOL = 1e-10
SUPPORT_TOL = 1e-12
# Rounding-level gaps (single populated eigenspace) are reported as exactly 0.
GAP_ZERO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Density matrix of a finite-dimensional probe.

    Use :meth:`pure` or :meth:`mixed` to build validated states.
    """

    rho: np.ndarray
    is_pure: bool = False

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @classmethod
    def pure(cls, psi) -> "QuantumState":
        v = np.asarray(psi, dtype=complex).ravel()
        norm = np.linalg.norm(v)
        if norm == 0:
            raise QBoundError("zero state vector")
        v = v / norm
        return cls(np.outer(v, v.conj()), True)

    @classmethod
    def mixed(cls, rho, is_pure: bool | None = None) -> "QuantumState":
        r = as_matrix(rho)
        if not is_hermitian(r):
            raise QBoundError("density matrix is not Hermitian")
        tr = np.trace(r).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise QBoundError(f"density matrix trace {tr!r} differs from 1")
        check_psd(r)
        r = 0.5 * (r + r.conj().T)
        purity = float(np.real(np.vdot(r, r)))
        if is_pure is None:
            is_pure = purity >= 1.0 - PURITY_TOL
        elif is_pure and purity < 1.0 - PURITY_TOL:
            raise QBoundError(f"state flagged pure has purity {purity:.12g}")
        return cls(r, bool(is_pure))

    def purity(self) -> float:
        return float(np.real(np.vdot(self.rho, self.rho)))

    def vector(self) -> np.ndarray:
        """State vector of a pure state (global phase fixed by the eigensolver)."""
        if not self.is_pure:
            raise QBoundError("state is not pure")
        eig = hermitian_eig(self.rho)
        return eig.eigenvectors[:, -1]


@dataclass(frozen=True, eq=False)
class Generator:
    """Hermitian generator ``H`` with its eigendecomposition cached."""

    H: np.ndarray
    eig: EigenDecomposition = field(init=False, repr=False)

    def __post_init__(self):
        h = as_matrix(self.H)
        object.__setattr__(self, "H", 0.5 * (h + h.conj().T))
        object.__setattr__(self, "eig", hermitian_eig(h))

    @classmethod
    def diagonal(cls, energies) -> "Generator":
        return cls(np.diag(np.asarray(energies, dtype=float)))

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def unitary(self, x: float) -> np.ndarray:
        return self.eig.apply_function(lambda w: np.exp(-1j * x * w))

    def eigenspaces(self, tol: float = DEGENERACY_TOL) -> list[tuple[float, np.ndarray]]:
        """Group eigenvalues within ``tol``; returns (energy, basis columns) per level."""
        w = self.eig.eigenvalues
        v = self.eig.eigenvectors
        groups = []
        start = 0
        for k in range(1, len(w) + 1):
            if k == len(w) or w[k] - w[k - 1] > tol:
                groups.append((float(np.mean(w[start:k])), v[:, start:k]))
                start = k
        return groups


@dataclass(frozen=True)
class ResourceSummary:
    mean_h: float
    var_h: float
    e0: float
    gap: float

    @property
    def delta_h(self) -> float:
        return float(np.sqrt(self.var_h))


def _check_dims(state: QuantumState, gen: Generator) -> None:
    if state.dim != gen.dim:
        raise DimensionMismatch(f"state dim {state.dim} vs generator dim {gen.dim}")


def random_mixed_state(dim: int, rng: np.random.Generator) -> QuantumState:
    """Full-rank density matrix from a random PSD matrix scaled to unit trace."""
    rho = random_psd(dim, rng)
    return QuantumState.mixed(rho / np.trace(rho).real)


def evolve(state: QuantumState, gen: Generator, x: float) -> QuantumState:
    """Return ``U_x rho U_x^dagger``."""
    _check_dims(state, gen)
    u = gen.unitary(x)
    rho = u @ state.rho @ u.conj().T
    return QuantumState(0.5 * (rho + rho.conj().T), state.is_pure)


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """Uhlmann fidelity ``[Tr sqrt(sqrt(a) b sqrt(a))]^2`` clipped to [0, 1]."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"dims {a.dim} and {b.dim}")
    if a.is_pure or b.is_pure:
        # <psi|sigma|psi> for a pure argument; exact and avoids two square roots.
        pure, other = (a, b) if a.is_pure else (b, a)
        value = float(np.real(np.vdot(pure.rho, other.rho)))
    else:
        root = psd_sqrt(a.rho)
        inner = root @ b.rho @ root
        w = hermitian_eig(0.5 * (inner + inner.conj().T)).eigenvalues
        if w[0] < -PSD_CLIP:
            raise QBoundError("fidelity kernel is not positive semidefinite")
        value = float(np.sum(np.sqrt(np.clip(w, 0.0, None)))) ** 2
    return min(max(value, 0.0), 1.0)


def joint_fidelity(a: QuantumState, b: QuantumState, nu: int) -> float:
    """Fidelity between ``a^{(x) nu}`` and ``b^{(x) nu}`` via multiplicativity."""
    if nu < 1:
        raise QBoundError("nu must be a positive integer")
    return fidelity(a, b) ** nu


def tensor_power(state: QuantumState, nu: int) -> QuantumState:
    """Explicit ``nu``-fold tensor power; exponential in ``nu``, for checks only."""
    rho = state.rho
    for _ in range(nu - 1):
        rho = np.kron(rho, state.rho)
    return QuantumState(rho, state.is_pure)


def moments(state: QuantumState, gen: Generator) -> tuple[float, float]:
    """Mean and variance of ``H`` on the state, variance clipped at zero."""
    _check_dims(state, gen)
    mean = float(np.real(np.trace(state.rho @ gen.H)))
    second = float(np.real(np.trace(state.rho @ gen.H @ gen.H)))
    return mean, max(second - mean * mean, 0.0)


def populations(state: QuantumState, gen: Generator) -> list[tuple[float, float]]:
    """(energy, population) for each eigenspace of ``H``."""
    _check_dims(state, gen)
    out = []
    for energy, basis in gen.eigenspaces():
        pop = float(np.real(np.trace(basis.conj().T @ state.rho @ basis)))
        out.append((energy, pop))
    return out


def ground_energy(state: QuantumState, gen: Generator, support_tol: float = SUPPORT_TOL) -> float:
    """Lowest eigenvalue of ``H`` whose eigenspace is populated by the state.

    An eigenspace counts as populated when its population exceeds
    ``support_tol``; degenerate eigenvalues are grouped within 1e-10.
    """
    if support_tol <= 0:
        raise QBoundError("support_tol must be positive")
    for energy, pop in populations(state, gen):
        if pop > support_tol:
            return energy
    raise EmptySupport(f"no eigenspace population exceeds {support_tol:g}")


def resources(state: QuantumState, gen: Generator, support_tol: float = SUPPORT_TOL) -> ResourceSummary:
    mean, var = moments(state, gen)
    e0 = ground_energy(state, gen, support_tol)
    gap = mean - e0
    if abs(gap) <= GAP_ZERO_TOL * (1.0 + abs(mean) + abs(e0)):
        gap = 0.0
    if gap < -TRACE_TOL:
        raise QBoundError(f"negative gap {gap:.3e}")
    return ResourceSummary(mean, var, e0, max(gap, 0.0))
