"""Renormalization functions and asymptotic variance constants.

Contents
--------
F_series
    Time-lagged cosine series of the heat semigroup, the building block of
    all double-increment covariances.
phi_norm, psi
    Exact and balanced-regime normalizations of squared double increments.
H_mom, H_ker, lambda_jl, C_of_h, B_constant
    Kernel functions and lattice sums entering the asymptotic variances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from ._fourier import angle, cos_sum_inv2, gaussian_tail_terms
from .model import Params, validate_params

SQRT_PI = math.sqrt(math.pi)
PI2 = math.pi**2


@dataclass(frozen=True)
class SeriesConfig:
    """Truncation controls.

    Attributes
    ----------
    tol : float
        Absolute tolerance for one-dimensional series.
    max_terms : int
        Hard cap on the number of series terms.
    lattice_cut : int
        Initial half-width ``L`` of the lattice ``|j|, |l| <= L`` in ``C_of_h``.
    lattice_tol : float
        Stop doubling the lattice once ``C(h)`` changes by less than this.
    lattice_max : int
        Largest lattice half-width tried.
    """

    tol: float = 1e-14
    max_terms: int = 10_000_000
    lattice_cut: int = 128
    lattice_tol: float = 1e-6
    lattice_max: int = 4096

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.max_terms < 1000:
            raise ValueError("max_terms must be >= 1000")
        if self.lattice_cut < 8:
            raise ValueError("lattice_cut must be >= 8")


DEFAULT_CONFIG = SeriesConfig()


def F_series(J: int, z, dt: float, theta2: float, cfg: SeriesConfig = DEFAULT_CONFIG):
    """Lagged heat-kernel cosine series.

    For ``J = 0``::

        F(z, dt) = sum_l (1 - exp(-c l^2 dt)) / (c l^2) cos(pi l z),   c = pi^2 theta2,

    and for ``J >= 1``::

        F_J(z) = sum_l (2 e^{-c J l^2 dt} - e^{-c (J+1) l^2 dt} - e^{-c (J-1) l^2 dt}) / (2 c l^2) cos(pi l z).

    Terms without exponential damping are summed in closed form; the rest
    converge like ``exp(-c l^2 dt)`` and are truncated by a certified bound.
    ``dt = inf`` is allowed.
    """
    if J < 0 or int(J) != J:
        raise ValueError("J must be a nonnegative integer")
    if not theta2 > 0 or not dt > 0:
        raise ValueError("dt and theta2 must be > 0")
    z = np.asarray(z, dtype=float)
    c = PI2 * theta2
    th = angle(z)
    # (lag multiple of dt, weight) pairs; the series is sum_pairs weight * sum_l e^{-c m l^2 dt} cos / (c l^2)
    if J == 0:
        terms = [(0, 1.0), (1, -1.0)]
    else:
        terms = [(J, 1.0), (J + 1, -0.5), (J - 1, -0.5)]
    out = np.zeros_like(th)
    for m, wgt in terms:
        if m == 0:
            out = out + wgt * cos_sum_inv2(th) / c
        elif math.isfinite(dt):
            out = out + wgt * _damped_cos_sum(c * m * dt, z, cfg) / c
    return out[()] if out.ndim == 0 else out


def _damped_cos_sum(rate: float, z, cfg: SeriesConfig):
    """sum_{l>=1} exp(-rate l^2) cos(pi l z) / l^2."""
    L = gaussian_tail_terms(rate, cfg.tol, cfg.max_terms)
    z = np.asarray(z, dtype=float)
    zf = z.ravel()
    acc = np.zeros(zf.size)
    chunk = max(1, (1 << 22) // max(zf.size, 1))
    for start in range(1, L + 1, chunk):
        ell = np.arange(start, min(L, start + chunk - 1) + 1, dtype=float)
        w = np.exp(-rate * ell * ell) / (ell * ell)
        acc += w @ np.cos(np.pi * np.outer(ell, zf))
    return acc.reshape(z.shape)


def phi_norm(dx: float, dt: float, p: Params, cfg: SeriesConfig = DEFAULT_CONFIG) -> float:
    """Exact normalization of squared double increments.

    ``Phi(dx, dt) = F(0, dt) (1 + e^{-kappa dx}) - 2 F(dx, dt) e^{-kappa dx / 2}``.
    """
    validate_params(p)
    kappa = p.kappa
    f0 = F_series(0, 0.0, dt, p.theta2, cfg)
    fd = F_series(0, dx, dt, p.theta2, cfg)
    return float(f0 * (1.0 + math.exp(-kappa * dx)) - 2.0 * fd * math.exp(-0.5 * kappa * dx))


def gauss_tail(x):
    """``int_x^inf exp(-z^2) dz`` via the complementary error function."""
    return 0.5 * SQRT_PI * special.erfc(x)


def psi(r, theta2):
    """Balanced-regime limit of ``Phi / sqrt(dt)`` at ratio ``r = dx / sqrt(dt)``.

    ``psi(r) = 2/sqrt(pi theta2) (1 - exp(-r^2/(4 theta2)) + r/sqrt(theta2) int_{r/(2 sqrt(theta2))}^inf e^{-z^2} dz)``
    with ``psi(0) = 0`` and ``psi(inf) = 2/sqrt(pi theta2)``.
    """
    r = np.asarray(r, dtype=float)
    theta2 = np.asarray(theta2, dtype=float)
    if np.any(theta2 <= 0):
        raise ValueError("theta2 must be > 0")
    if np.any(r < 0):
        raise ValueError("r must be >= 0")
    st = np.sqrt(theta2)
    with np.errstate(invalid="ignore"):
        h = np.where(np.isinf(r), 0.0, r / st)
        core = -np.expm1(-0.25 * h * h) + h * gauss_tail(0.5 * h)
    core = np.where(np.isinf(r), 1.0, core)
    out = 2.0 / (SQRT_PI * st) * core
    return out[()] if out.ndim == 0 else out


def psi_dtheta2(r, theta2):
    """Derivative of :func:`psi` with respect to ``theta2``; strictly negative for ``r > 0``."""
    r = np.asarray(r, dtype=float)
    theta2 = np.asarray(theta2, dtype=float)
    x = r / (2.0 * np.sqrt(theta2))
    out = -H_mom_prime(x) / (4.0 * theta2**1.5)
    return out[()] if np.ndim(out) == 0 else out


def H_mom(x):
    """Moment function ``(4x/sqrt(pi)) (1 - e^{-x^2} + 2x int_x^inf e^{-z^2} dz)``, so that ``psi(r) = H_mom(r/(2 sqrt(theta2))) / r``."""
    x = np.asarray(x, dtype=float)
    out = 4.0 * x / SQRT_PI * (-np.expm1(-x * x) + 2.0 * x * gauss_tail(x))
    return out[()] if out.ndim == 0 else out


def H_mom_prime(x):
    """Derivative of :func:`H_mom`."""
    x = np.asarray(x, dtype=float)
    out = 4.0 / SQRT_PI * (-np.expm1(-x * x) + 4.0 * x * gauss_tail(x))
    return out[()] if out.ndim == 0 else out


def psi_inverse(v: float, r: float, rtol: float = 1e-12) -> float:
    """Solve ``psi(r, theta2) = v`` for ``theta2``.

    ``theta2 -> psi(r, theta2)`` decreases strictly from ``+inf`` to 0, so the
    root is unique; it is bracketed by expansion in ``log theta2`` and refined
    with Brent's method.
    """
    if not (np.isfinite(v) and v > 0):
        raise ValueError(f"target value must be > 0 (got {v})")
    if not (np.isfinite(r) and r > 0):
        raise ValueError(f"r must be > 0 (got {r})")
    lv = math.log(v)

    def g(s):
        return math.log(psi(r, math.exp(s))) - lv

    # asymptotes: psi ~ r/theta2 (large theta2) and psi ~ 2/sqrt(pi theta2) (small theta2)
    s0 = math.log(max(min(r / v, 4.0 / (math.pi * v * v)), 1e-300))
    lo, hi = s0 - 1.0, s0 + 1.0
    for _ in range(200):
        if g(lo) > 0:
            break
        lo -= 2.0 * (hi - lo)
    for _ in range(200):
        if g(hi) < 0:
            break
        hi += 2.0 * (hi - lo)
    if not (g(lo) > 0 > g(hi)):
        raise RuntimeError("psi_inverse: bracket expansion failed")
    s = optimize.brentq(g, lo, hi, xtol=rtol * 1e-2, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(s)


def H_ker(x):
    """Kernel ``(1/(2 sqrt(pi))) (e^{-x^2/4} - x int_{x/2}^inf e^{-z^2} dz)``."""
    x = np.asarray(x, dtype=float)
    out = (np.exp(-0.25 * x * x) - x * gauss_tail(0.5 * x)) / (2.0 * SQRT_PI)
    return out[()] if out.ndim == 0 else out


def _G(jj, ll, h):
    """``G_h(j, l) = sqrt(|j|) H_ker(h |l| / sqrt(|j|))`` with ``G_h(0, l) = 0``."""
    jj = np.abs(np.asarray(jj, dtype=float))
    ll = np.abs(np.asarray(ll, dtype=float))
    safe = np.where(jj == 0, 1.0, jj)
    sj = np.sqrt(safe)
    return np.where(jj == 0, 0.0, sj * H_ker(h * ll / sj))


_STENCIL = np.array([1.0, -2.0, 1.0])


def lambda_jl(j, l, h: float):
    """Fourth-order difference ``(D_x^2 D_y^2 G_h)(|j| - 1, |l| - 1)``.

    ``D^2 f(x) = f(x + 2) + f(x) - 2 f(x + 1)`` acts in each coordinate.
    """
    j = np.abs(np.asarray(j))
    l = np.abs(np.asarray(l))
    out = np.zeros(np.broadcast(j, l).shape)
    for a in range(3):
        for c in range(3):
            out = out + _STENCIL[a] * _STENCIL[c] * _G(j - 1 + a, l - 1 + c, h)
    return out[()] if out.ndim == 0 else out


def lambda_grid(L: int, h: float) -> np.ndarray:
    """``Lambda_{j,l}(h)`` for ``0 <= j, l <= L`` as an ``(L+1, L+1)`` array."""
    idx = np.arange(-1, L + 2)
    G = _G(idx[:, None], idx[None, :], h)
    # second differences along each axis, starting at |j|-1 = -1
    Dx = G[2:, :] + G[:-2, :] - 2.0 * G[1:-1, :]
    return Dx[:, 2:] + Dx[:, :-2] - 2.0 * Dx[:, 1:-1]


def _lattice_sum(L: int, h: float):
    lam = lambda_grid(L, h)
    w = np.full(L + 1, 2.0)
    w[0] = 1.0
    total = float(np.sum((w[:, None] * w[None, :]) * lam * lam))
    return total, float(lam[0, 0])


@dataclass(frozen=True)
class LatticeResult:
    """Value of ``C(h)`` with truncation diagnostics."""

    value: float
    lattice_cut: int
    tail_estimate: float
    converged: bool


def C_of_h_detail(h: float, cfg: SeriesConfig = DEFAULT_CONFIG) -> LatticeResult:
    """``C(h) = 2 / Lambda_00^2 * sum_{j,l in Z} Lambda_{j,l}(h)^2`` with diagnostics.

    The lattice half-width starts at ``cfg.lattice_cut`` and doubles until
    successive values differ by less than ``cfg.lattice_tol``. Terms decay
    like ``|j|^-3`` along the first axis, so the remaining tail is about a
    third of the last increment; that figure is reported as ``tail_estimate``.
    """
    if h < 0 or math.isnan(h):
        raise ValueError("h must be >= 0")
    if h == 0.0:
        return LatticeResult(3.0, 0, 0.0, True)
    if math.isinf(h):
        return LatticeResult(1.5 * B_constant(cfg), 0, 0.0, True)
    L = cfg.lattice_cut
    s, l00 = _lattice_sum(L, h)
    prev = 2.0 * s / (l00 * l00)
    while True:
        if 2 * L > cfg.lattice_max:
            return LatticeResult(prev, L, float("nan"), False)
        L *= 2
        s, l00 = _lattice_sum(L, h)
        cur = 2.0 * s / (l00 * l00)
        inc = abs(cur - prev)
        if inc < cfg.lattice_tol:
            return LatticeResult(cur, L, inc / 3.0, True)
        prev = cur


def C_of_h(h: float, cfg: SeriesConfig = DEFAULT_CONFIG) -> float:
    """Asymptotic variance factor of the space-time quadratic variation at ``h = r / sqrt(theta2)``.

    ``C(0) = 3`` and ``C(inf) = 1.5 B`` are returned from dedicated branches.
    """
    return C_of_h_detail(h, cfg).value


def B_terms(J):
    """Terms ``(2 sqrt(J) - sqrt(J+1) - sqrt(J-1))^2`` in cancellation-free form."""
    J = np.asarray(J, dtype=float)
    a = np.sqrt(J + 1.0)
    b = np.sqrt(J)
    c = np.sqrt(J - 1.0)
    d = 2.0 / ((a + c) * (b + c) * (a + b))
    return d * d


def B_constant_bounds(n_terms: int = 100_000) -> tuple[float, float]:
    """``B = 2 + sum_{J>=1} (2 sqrt(J) - sqrt(J+1) - sqrt(J-1))^2`` with a certified error bound.

    Each term lies in ``[1/(16 J^3), 1/(16 (J-1)^3)]``, which brackets the
    tail after ``n_terms`` terms. Returns ``(value, half_width)``.
    """
    J = np.arange(1, n_terms + 1, dtype=float)
    partial = 2.0 + math.fsum(B_terms(J))
    L = float(n_terms)
    tail_lo = 1.0 / (32.0 * (L + 1.0) ** 2)
    tail_hi = 1.0 / (16.0 * L**3) + 1.0 / (32.0 * L * L)
    return partial + 0.5 * (tail_lo + tail_hi), 0.5 * (tail_hi - tail_lo) + 1e-15


def B_constant(cfg: SeriesConfig = DEFAULT_CONFIG) -> float:
    """Asymptotic variance factor of the temporal quadratic variation (about 2.3575)."""
    return B_constant_bounds()[0]
