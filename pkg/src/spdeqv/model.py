"""Parameters, eigenpairs and covariance kernels of the stochastic heat equation.

The model is the linear parabolic equation

    dX_t(y) = (theta2 X_t''(y) + theta1 X_t'(y) + theta0 X_t(y)) dt + sigma dW_t(y)

on ``y in [0, 1]`` with Dirichlet boundary conditions, driven by space-time
white noise and started in its stationary law. In the eigenbasis

    e_l(y) = sqrt(2) sin(pi l y) exp(-kappa y / 2),
    lambda_l = theta2 (pi^2 l^2 + Gamma),

with ``kappa = theta1 / theta2`` and ``Gamma = theta1^2 / (4 theta2^2) - theta0 / theta2``,
the field has covariance

    Cov(X_s(x), X_t(y)) = sigma^2 sum_l exp(-lambda_l |t - s|) / (2 lambda_l) e_l(x) e_l(y).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ._fourier import angle, cos_sum_inv2, cos_sum_inv4, gaussian_tail_terms

logger = logging.getLogger(__name__)

PI2 = math.pi**2
#: Below this |Gamma| the polynomial (Gamma = 0) branch of the closed forms is used.
GAMMA_DEGENERATE = 1e-8
DEFAULT_MAX_TERMS = 10_000_000
_CHUNK_ELEMS = 1 << 22


class ParameterError(ValueError):
    """Raised when a parameter vector lies outside the admissible set.

    Attributes
    ----------
    inequality : str
        The admissibility condition that failed.
    """

    def __init__(self, message: str, inequality: str):
        super().__init__(message)
        self.inequality = inequality


@dataclass(frozen=True)
class Params:
    """Model parameters ``(sigma^2, theta2, theta1, theta0)``."""

    sigma2: float
    theta2: float
    theta1: float = 0.0
    theta0: float = 0.0

    @property
    def kappa(self) -> float:
        return self.theta1 / self.theta2

    @property
    def gamma(self) -> float:
        return self.theta1**2 / (4.0 * self.theta2**2) - self.theta0 / self.theta2

    @property
    def rho2(self) -> float:
        """Natural spatial parameter ``sigma^2 / theta2``."""
        return self.sigma2 / self.theta2

    def derived(self) -> "DerivedParams":
        return validate_params(self)


@dataclass(frozen=True)
class DerivedParams:
    """Quantities derived from a valid :class:`Params`."""

    kappa: float
    gamma: float
    theta2: float

    @property
    def beta(self) -> float:
        """Eigenvalue shift in units of ``pi^2``: ``lambda_l = theta2 pi^2 (l^2 + beta)``."""
        return self.gamma / PI2

    def eigenvalue(self, ell):
        ell = np.asarray(ell, dtype=float)
        return self.theta2 * (PI2 * ell * ell + self.gamma)


def validate_params(p: Params) -> DerivedParams:
    """Check that ``p`` lies in the admissible set and return derived quantities.

    Raises
    ------
    ParameterError
        Naming the failed inequality.
    """
    vals = (p.sigma2, p.theta2, p.theta1, p.theta0)
    if not all(math.isfinite(float(v)) for v in vals):
        raise ParameterError("parameters must be finite", "finite")
    if not p.sigma2 > 0:
        raise ParameterError(f"sigma2 must be > 0 (got {p.sigma2})", "sigma2 > 0")
    if not p.theta2 > 0:
        raise ParameterError(f"theta2 must be > 0 (got {p.theta2})", "theta2 > 0")
    gamma = p.gamma
    if not gamma + PI2 > 0:
        raise ParameterError(
            f"theta1^2/(4 theta2^2) - theta0/theta2 + pi^2 must be > 0 (got {gamma + PI2:.6g})",
            "Gamma + pi^2 > 0",
        )
    return DerivedParams(kappa=p.kappa, gamma=gamma, theta2=p.theta2)


@dataclass(frozen=True)
class GridSpec:
    """Regular observation grid.

    Times ``t_i = i * T / N`` for ``i = 0..N`` and locations
    ``y_k = b + k * (1 - 2b) / M`` for ``k = 0..M``.
    """

    N: int
    M: int
    T: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"degenerate grid: N must be a positive integer (got {self.N})")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"degenerate grid: M must be a positive integer (got {self.M})")
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValueError(f"degenerate grid: T must be > 0 (got {self.T})")
        if not 0.0 <= self.b < 0.5:
            raise ValueError(f"degenerate grid: b must lie in [0, 1/2) (got {self.b})")

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def dx(self) -> float:
        return (1.0 - 2.0 * self.b) / self.M

    @property
    def ratio(self) -> float:
        """``r = dx / sqrt(dt)``."""
        return self.dx / math.sqrt(self.dt)

    @property
    def times(self) -> np.ndarray:
        t = np.arange(self.N + 1) * self.dt
        t[-1] = self.T
        return t

    @property
    def locations(self) -> np.ndarray:
        y = self.b + np.arange(self.M + 1) * self.dx
        y[0] = self.b
        y[-1] = 1.0 - self.b
        return y

    @property
    def n_points(self) -> int:
        return (self.N + 1) * (self.M + 1)


def eigenfunction_eval(ell, y, d: DerivedParams):
    """Evaluate ``e_l(y) = sqrt(2) sin(pi l y) exp(-kappa y / 2)``; exactly 0 at y in {0, 1}."""
    ell = np.asarray(ell)
    if np.any(ell < 1):
        raise ValueError("eigenfunction index must be >= 1")
    y = np.asarray(y, dtype=float)
    _check_locations(y)
    val = math.sqrt(2.0) * np.sin(np.pi * ell * y) * np.exp(-0.5 * d.kappa * y)
    val = np.where((y == 0.0) | (y == 1.0), 0.0, val)
    return val[()] if np.ndim(val) == 0 else val


def cosine_series_closed(beta: float, x):
    """Closed form of ``sum_{l>=1} cos(pi l x) / (l^2 + beta)`` for ``x in [0, 1]``.

    Parameters
    ----------
    beta : float
        Shift, must exceed -1.
    x : array_like
        Points in ``[0, 1]``.
    """
    if not beta > -1.0:
        raise ValueError(f"beta must exceed -1 (got {beta})")
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("x must lie in [0, 1]")
    if abs(beta) < GAMMA_DEGENERATE / PI2:
        out = PI2 * (x - 1.0) ** 2 / 4.0 - PI2 / 12.0
    elif beta < 0.0:
        s = math.sqrt(-beta)
        out = -np.pi * np.cos(np.pi * s * (x - 1.0)) / (2.0 * s * math.sin(np.pi * s)) + 1.0 / (2.0 * -beta)
    else:
        s = math.sqrt(beta)
        # cosh(a (x-1)) / sinh(a) written with decaying exponentials to avoid overflow
        a = np.pi * s
        ratio = (np.exp(-a * x) + np.exp(-a * (2.0 - x))) / (-np.expm1(-2.0 * a))
        out = np.pi * ratio / (2.0 * s) - 1.0 / (2.0 * beta)
    return out[()] if out.ndim == 0 else out


def spatial_covariance_closed(x, y, p: Params):
    """Closed-form stationary spatial covariance ``Cov(X_t(x), X_t(y))``.

    Arguments are sorted pairwise so the formula for ``x <= y`` applies.
    """
    d = validate_params(p)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_locations(x)
    _check_locations(y)
    lo = np.minimum(x, y)
    hi = np.maximum(x, y)
    g = d.gamma
    if abs(g) < GAMMA_DEGENERATE:
        core = lo * (1.0 - hi)
    elif g < 0.0:
        g0 = math.sqrt(-g)
        core = np.sin(g0 * (1.0 - hi)) * np.sin(g0 * lo) / (g0 * math.sin(g0))
    else:
        g0 = math.sqrt(g)
        # sinh(g0 (1-hi)) sinh(g0 lo) / sinh(g0), rescaled by exp(-g0) to avoid overflow
        num = -np.expm1(-2.0 * g0 * (1.0 - hi)) * -np.expm1(-2.0 * g0 * lo)
        core = num * np.exp(g0 * (lo - hi)) / (2.0 * g0 * -np.expm1(-2.0 * g0))
    out = p.sigma2 / (2.0 * p.theta2) * np.exp(-0.5 * d.kappa * (lo + hi)) * core
    return out[()] if out.ndim == 0 else out


def ito_coefficients(x: float, z, p: Params):
    """Drift and diffusion of the spatial Ito representation of ``y -> X_t(y)``.

    Returns
    -------
    drift, diffusion
        ``drift = -(c(x) + kappa/2) z`` with the Gamma-dependent ``c`` and
        ``diffusion = sqrt(sigma^2 / (2 theta2)) exp(-kappa x / 2)``.
    """
    d = validate_params(p)
    if not 0.0 < x < 1.0:
        raise ValueError(f"x must lie in (0, 1) (got {x})")
    g = d.gamma
    u = 1.0 - x
    if abs(g) < GAMMA_DEGENERATE:
        coef = 1.0 / u
    elif g < 0.0:
        g0 = math.sqrt(-g)
        coef = g0 * math.cos(g0 * u) / math.sin(g0 * u)
    else:
        g0 = math.sqrt(g)
        coef = g0 / math.tanh(g0 * u)
    drift = -(coef + 0.5 * d.kappa) * np.asarray(z, dtype=float)
    diffusion = math.sqrt(p.sigma2 / (2.0 * p.theta2)) * math.exp(-0.5 * d.kappa * x)
    return (drift[()] if np.ndim(drift) == 0 else drift), diffusion


def field_covariance(s: float, x, t: float, y, p: Params, tol: float = 1e-10,
                     max_terms: int = DEFAULT_MAX_TERMS):
    """Covariance ``Cov(X_s(x), X_t(y))`` from the eigen-series.

    The series is truncated adaptively so that a certified tail bound stays
    below ``tol``. At equal times the slowly converging ``1/l^2`` part is
    summed exactly (Kummer transformation against the Bernoulli polynomial
    sums), leaving a remainder with ``O(l^-6)`` terms; at distinct times the
    terms decay like ``exp(-theta2 pi^2 l^2 |t - s|)``.

    ``x`` and ``y`` broadcast against each other; ``s`` and ``t`` are scalars.
    """
    d = validate_params(p)
    if s < 0 or t < 0:
        raise ValueError("times must be nonnegative")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_locations(x)
    _check_locations(y)
    x, y = np.broadcast_arrays(x, y)
    out = _kernel(abs(float(t) - float(s)), x - y, x + y, d, p.sigma2, tol, max_terms)
    out = np.where((x == 0.0) | (x == 1.0) | (y == 0.0) | (y == 1.0), 0.0, out)
    return out[()] if out.ndim == 0 else out


def covariance_blocks(lags, x, y, p: Params, tol: float = 1e-12,
                      max_terms: int = DEFAULT_MAX_TERMS) -> np.ndarray:
    """Cross-covariance blocks ``Cov(X_s(x_a), X_{s+tau_j}(y_b))``.

    Returns an array of shape ``(len(lags), len(x), len(y))``. This is the
    matrix form of :func:`field_covariance` used by the exact sampler and the
    increment covariances.
    """
    d = validate_params(p)
    lags = np.abs(np.atleast_1d(np.asarray(lags, dtype=float)))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    _check_locations(x)
    _check_locations(y)
    u = x[:, None] - y[None, :]
    v = x[:, None] + y[None, :]
    out = np.empty((lags.size, x.size, y.size))
    zero = lags == 0.0
    if np.any(zero):
        out[zero] = _kernel(0.0, u, v, d, p.sigma2, tol, max_terms)
    pos = np.flatnonzero(~zero)
    if pos.size:
        pref = _tail_prefactor(d, p.sigma2)
        rate = d.theta2 * PI2 * lags[pos]
        L = max(gaussian_tail_terms(r, tol, max_terms, pref * math.exp(-r * d.beta)) for r in rate)
        acc = np.zeros((pos.size, u.size))
        chunk = max(1, _CHUNK_ELEMS // max(u.size, 1))
        uf, vf = u.ravel(), v.ravel()
        for start in range(1, L + 1, chunk):
            ell = np.arange(start, min(L, start + chunk - 1) + 1, dtype=float)
            lam = d.eigenvalue(ell)
            w = np.exp(-np.outer(lags[pos], lam)) / (2.0 * lam)
            cos_tab = np.cos(np.pi * np.outer(ell, uf)) - np.cos(np.pi * np.outer(ell, vf))
            acc += w @ cos_tab
        out[pos] = p.sigma2 * np.exp(-0.5 * d.kappa * v)[None] * acc.reshape(pos.size, *u.shape)
    edge = ((x == 0.0) | (x == 1.0))[:, None] | ((y == 0.0) | (y == 1.0))[None, :]
    out[:, edge] = 0.0
    return out


def truncation_deficit(y, K: int, p: Params, tol: float = 1e-12):
    """Variance missing from a field truncated at ``K`` modes: ``sigma^2 sum_{l>K} e_l(y)^2 / (2 lambda_l)``."""
    d = validate_params(p)
    y = np.asarray(y, dtype=float)
    full = field_covariance(0.0, y, 0.0, y, p, tol=tol)
    ell = np.arange(1, K + 1, dtype=float)
    lam = d.eigenvalue(ell)
    e2 = 2.0 * np.sin(np.pi * np.outer(np.atleast_1d(y), ell)) ** 2
    head = p.sigma2 * np.exp(-d.kappa * np.atleast_1d(y)) * (e2 / (2.0 * lam)).sum(axis=1)
    out = np.atleast_1d(full) - head
    return out[0] if np.ndim(y) == 0 else out


def _check_locations(y: np.ndarray) -> None:
    if np.any(~np.isfinite(y)) or np.any((y < 0.0) | (y > 1.0)):
        raise ValueError("locations must lie in [0, 1]")


def _tail_prefactor(d: DerivedParams, sigma2: float) -> float:
    # |e_l(x) e_l(y)| <= 2 max(1, e^-kappa); 1/lambda_l <= 4 / (3 theta2 pi^2 l^2) for l >= 2
    return sigma2 * max(1.0, math.exp(-d.kappa)) * 4.0 / (3.0 * d.theta2 * PI2)


def _kernel(tau: float, u, v, d: DerivedParams, sigma2: float, tol: float, max_terms: int):
    """sigma^2 exp(-kappa v / 2) sum_l exp(-lambda_l tau) / (2 lambda_l) (cos(pi l u) - cos(pi l v))."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    beta = d.beta
    scale = 1.0 / (2.0 * d.theta2 * PI2)
    if tau == 0.0:
        tu, tv = angle(u), angle(v)
        s = (cos_sum_inv2(tu) - cos_sum_inv2(tv)) - beta * (cos_sum_inv4(tu) - cos_sum_inv4(tv))
        L = _kummer_terms(beta, tol / (sigma2 * max(1.0, math.exp(-d.kappa)) * 2.0 * scale), max_terms)
        if L:
            ell = np.arange(1, L + 1, dtype=float)
            coef = beta * beta / (ell**4 * (ell * ell + beta))
            s = s + _cos_weighted_sum(coef, ell, u, v)
        series = scale * s
    else:
        rate = d.theta2 * PI2 * tau
        pref = _tail_prefactor(d, sigma2) * math.exp(-rate * beta)
        L = gaussian_tail_terms(rate, tol, max_terms, pref)
        if L >= max_terms:
            logger.warning("covariance series hit max_terms=%d at lag %.3g", max_terms, tau)
        ell = np.arange(1, L + 1, dtype=float)
        lam = d.eigenvalue(ell)
        series = _cos_weighted_sum(np.exp(-lam * tau) / (2.0 * lam), ell, u, v)
    return sigma2 * np.exp(-0.5 * d.kappa * v) * series


def _kummer_terms(beta: float, tol: float, max_terms: int) -> int:
    """Terms needed so that ``2 sum_{l>L} beta^2 / (l^4 (l^2 + beta)) < tol``."""
    if beta == 0.0:
        return 0
    L = 1
    while L < max_terms:
        n = L + 1.0
        if 2.0 * beta * beta / ((n * n + beta) * 3.0 * L**3) < tol:
            return L
        L *= 2
    return max_terms


def _cos_weighted_sum(coef, ell, u, v):
    """sum_l coef_l (cos(pi l u) - cos(pi l v)), chunked over l."""
    shape = np.broadcast(u, v).shape
    uf = np.broadcast_to(u, shape).ravel()
    vf = np.broadcast_to(v, shape).ravel()
    acc = np.zeros(uf.size)
    chunk = max(1, _CHUNK_ELEMS // max(uf.size, 1))
    for start in range(0, ell.size, chunk):
        e = ell[start:start + chunk]
        c = coef[start:start + chunk]
        acc += c @ (np.cos(np.pi * np.outer(e, uf)) - np.cos(np.pi * np.outer(e, vf)))
    return acc.reshape(shape)
