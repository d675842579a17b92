"""Expectation-value precision bounds for quantum parameter estimation.

Numerical tools to evaluate and check the bound ``dX >= kappa / (nu (<H> - E0))``
together with the Cramer-Rao bound ``dX >= 1 / (sqrt(nu) dH)``, the quantum
speed-limit functions they derive from, and Monte Carlo estimation experiments.
"""

__version__ = "0.1.0"
