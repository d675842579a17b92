"""Reference values computed without the package, shared by several test modules."""

import numpy as np

LAM = np.arange(2.0, 50.0 + 5e-5, 1e-4)


def _beta_sq(f):
    return (2.0 * np.arccos(np.sqrt(f)) / np.pi) ** 2


def kappa_grid(biased: bool):
    """Dense-grid supremum of pi alpha(4/l^2) / (4 l) (or 4 (l + 1)) with alpha = beta^2."""
    denom = LAM + 1.0 if biased else LAM
    values = np.pi * _beta_sq(4.0 / LAM**2) / (4.0 * denom)
    i = int(np.argmax(values))
    return float(values[i]), float(LAM[i])


def cr_prefactor_grid():
    values = np.arccos(2.0 / LAM) / (2.0 * LAM)
    i = int(np.argmax(values))
    return float(values[i]), float(LAM[i])
