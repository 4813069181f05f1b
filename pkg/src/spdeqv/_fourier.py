"""Closed-form cosine sums shared by the series evaluators.

Both sums are polynomials in the angle on [0, 2*pi] (Bernoulli polynomials),
which lets slowly converging eigen-series be split into an exact part and a
rapidly converging remainder.
"""
from __future__ import annotations

import numpy as np


def angle(z):
    """Map ``z`` to ``theta = pi * (|z| mod 2)`` in ``[0, 2*pi)``."""
    z = np.abs(np.asarray(z, dtype=float))
    return np.pi * np.mod(z, 2.0)


def cos_sum_inv2(theta):
    """sum_{l>=1} cos(l*theta) / l**2 for theta in [0, 2*pi]."""
    theta = np.asarray(theta, dtype=float)
    return np.pi**2 / 6.0 - np.pi * theta / 2.0 + theta**2 / 4.0


def cos_sum_inv4(theta):
    """sum_{l>=1} cos(l*theta) / l**4 for theta in [0, 2*pi]."""
    theta = np.asarray(theta, dtype=float)
    t2 = theta * theta
    return np.pi**4 / 90.0 - np.pi**2 * t2 / 12.0 + np.pi * t2 * theta / 12.0 - t2 * t2 / 48.0


def gaussian_tail_terms(rate: float, tol: float, max_terms: int, prefactor: float = 1.0) -> int:
    """Smallest ``L`` with ``prefactor * sum_{l>L} exp(-rate*l**2) / l**2 < tol``.

    Uses the bound ``sum_{l>L} exp(-rate l^2)/l^2 <= exp(-rate (L+1)^2) /
    ((L+1)^2 (1 - exp(-rate (2L+3))))``. Returns ``max_terms`` if the cap is hit.
    """
    if rate <= 0.0:
        return max_terms
    lo, hi = 0, 1
    while hi < max_terms and _gauss_tail_bound(rate, hi, prefactor) >= tol:
        lo, hi = hi, 2 * hi
    hi = min(hi, max_terms)
    if _gauss_tail_bound(rate, hi, prefactor) >= tol:
        return max_terms
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _gauss_tail_bound(rate, mid, prefactor) < tol:
            hi = mid
        else:
            lo = mid
    return max(hi, 1)


def _gauss_tail_bound(rate: float, L: int, prefactor: float) -> float:
    n = L + 1.0
    denom = -np.expm1(-rate * (2.0 * L + 3.0))
    if denom <= 0.0:
        return np.inf
    return prefactor * np.exp(-rate * n * n) / (n * n * denom)
