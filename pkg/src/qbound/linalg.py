"""Dense complex linear algebra at desk scale.

Matrices are plain ``numpy`` complex arrays. The Hermitian eigensolver is a
cyclic Jacobi iteration, which is simple and reliably convergent for the small
dimensions (at most a few dozen) used throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotHermitian, NotPSD, NotSquare

HERMITIAN_TOL = 1e-12
PSD_CLIP = 1e-10
_MAX_SWEEPS = 64


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in ascending order and the matching unitary (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def apply_function(self, fn) -> np.ndarray:
        """Return ``V fn(D) V^dagger``."""
        v = self.eigenvectors
        return (v * fn(self.eigenvalues)) @ v.conj().T


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {a.shape}")
    return a


def max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return max_abs(m - m.conj().T) <= tol * (1.0 + max_abs(m))


def hermitian_eig(m) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Raises:
        NotSquare: if ``m`` is not square.
        NotHermitian: if ``m`` departs from Hermiticity beyond
            ``1e-12 * (1 + max|m|)``.
    """
    a = as_matrix(m)
    if not is_hermitian(a):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    n = a.shape[0]
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    if n == 1:
        return EigenDecomposition(a.real.diagonal().copy(), v)

    scale = max_abs(a)
    if scale == 0.0:
        return EigenDecomposition(np.zeros(n), v)
    threshold = (1e-15 * scale) ** 2
    # Python complex scalars: far cheaper than numpy slicing at these sizes.
    rows = a.tolist()
    vec = v.tolist()
    for _ in range(_MAX_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            rp = rows[p]
            for q in range(p + 1, n):
                off += abs(rp[q]) ** 2
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                rp = rows[p]
                rq = rows[q]
                apq = rp[q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase_c = (apq / mag).conjugate()
                app = rp[p].real
                aqq = rq[q].real
                tau = (aqq - app) / (2.0 * mag)
                t = 1.0 / (abs(tau) + (1.0 + tau * tau) ** 0.5)
                if tau < 0:
                    t = -t
                c = 1.0 / (1.0 + t * t) ** 0.5
                s = t * c
                # J on (p, q) = diag(1, conj(phase)) @ [[c, s], [-s, c]].
                jqp = -s * phase_c
                jqq = c * phase_c
                for k in range(n):
                    rk = rows[k]
                    xp = rk[p]
                    xq = rk[q]
                    rk[p] = xp * c + xq * jqp
                    rk[q] = xp * s + xq * jqq
                jqp_c = jqp.conjugate()
                jqq_c = jqq.conjugate()
                for k in range(n):
                    xp = rp[k]
                    xq = rq[k]
                    rp[k] = xp * c + xq * jqp_c
                    rq[k] = xp * s + xq * jqq_c
                rp[q] = 0j
                rq[p] = 0j
                rp[p] = complex(app - t * mag)
                rq[q] = complex(aqq + t * mag)
                for k in range(n):
                    vk = vec[k]
                    xp = vk[p]
                    xq = vk[q]
                    vk[p] = xp * c + xq * jqp
                    vk[q] = xp * s + xq * jqq
    a = np.array(rows, dtype=complex)
    v = np.array(vec, dtype=complex)

    w = a.diagonal().real.copy()
    order = np.argsort(w, kind="stable")
    return EigenDecomposition(w[order], v[:, order].copy())


def psd_sqrt(m) -> np.ndarray:
    """Principal square root of a Hermitian positive semidefinite matrix.

    Eigenvalues in ``[-1e-10, 0)`` are treated as rounding noise and clipped.
    """
    eig = hermitian_eig(m)
    lowest = eig.eigenvalues[0]
    if lowest < -PSD_CLIP:
        raise NotPSD(f"eigenvalue {lowest:.3e} below -{PSD_CLIP:g}")
    root = eig.apply_function(lambda w: np.sqrt(np.clip(w, 0.0, None)))
    return 0.5 * (root + root.conj().T)


def check_psd(m, clip: float = PSD_CLIP) -> EigenDecomposition:
    eig = hermitian_eig(m)
    if eig.eigenvalues[0] < -clip:
        raise NotPSD(f"eigenvalue {eig.eigenvalues[0]:.3e} below -{clip:g}")
    return eig


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_psd(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    b = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    return b @ b.conj().T
