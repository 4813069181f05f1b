"""Point estimators for volatility, diffusivity and curvature, with asymptotic variances.

Method-of-moments estimators invert the first moments of the rescaled
quadratic variations. The least-squares estimators fit the per-location
means of squared double increments over one and two time steps against
their parametric mean curves ``sigma^2 psi_theta2(r / sqrt(nu)) e^{-kappa z}``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .model import Params
from .series import (DEFAULT_CONFIG, SeriesConfig, B_constant, C_of_h, C_of_h_detail, lambda_grid,
                     psi, psi_dtheta2, psi_inverse)
from .simulate import Field
from .stats import coarse_double_increments, increments, realized_qv

logger = logging.getLogger(__name__)

SIGMA2_METHODS = ("sp", "t", "double")
THETA2_METHODS = ("sp", "t", "r")


@dataclass
class EstimateResult:
    """Estimator output.

    Attributes
    ----------
    method : str
    estimate : float or ndarray
        Scalar, ``(rho2, kappa)`` or ``(sigma2, theta2, kappa)``.
    asymptotic_se : float, ndarray or None
        Standard error from the asymptotic variance at the estimate.
    converged : bool
    diagnostics : dict
    """

    method: str
    estimate: float | np.ndarray
    asymptotic_se: float | np.ndarray | None = None
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def conv(x):
            if isinstance(x, np.ndarray):
                return x.tolist()
            if isinstance(x, (np.floating, np.integer)):
                return x.item()
            if isinstance(x, dict):
                return {k: conv(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [conv(v) for v in x]
            return x
        return {"method": self.method, "estimate": conv(self.estimate),
                "asymptotic_se": conv(self.asymptotic_se), "converged": self.converged,
                "diagnostics": conv(self.diagnostics)}


@dataclass(frozen=True)
class BoxH:
    """Search box for ``(sigma2, theta2, kappa)``."""

    lower: tuple[float, float, float] = (1e-6, 1e-3, -50.0)
    upper: tuple[float, float, float] = (1e3, 1e3, 50.0)

    def __post_init__(self):
        lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ValueError("box bounds need three components")
        if not (lo[0] > 0 and lo[1] > 0):
            raise ValueError("box lower bounds for sigma2 and theta2 must be > 0")
        if not np.all(lo < hi):
            raise ValueError("box lower bounds must be below upper bounds")


def _shape_params(theta2: float, kappa: float, sigma2: float = 1.0) -> Params:
    """Params with the given ``(sigma2, theta2, kappa)`` and ``theta0 = 0``."""
    return Params(sigma2=sigma2, theta2=theta2, theta1=kappa * theta2, theta0=0.0)


def _mn(f: Field) -> int:
    return f.grid.M * f.grid.N


# ----------------------------------------------------------------------------- moment estimators


def estimate_sigma2(f: Field, method: str, theta2: float, kappa: float,
                    cfg: SeriesConfig = DEFAULT_CONFIG) -> EstimateResult:
    """Volatility from a rescaled quadratic variation with ``theta2`` and ``kappa`` known.

    ``sp``: ``2 theta2 Vsp`` (wants ``N = o(M)``); ``t``: ``sqrt(pi theta2) Vt``
    (wants ``M = o(sqrt(N))``); ``double``: ``Vdouble`` (any regime).
    """
    g = f.grid
    if method == "sp":
        stat = realized_qv(f, "Vsp", kappa)
        est = 2.0 * theta2 * stat.value
    elif method == "t":
        stat = realized_qv(f, "Vt", kappa)
        est = math.sqrt(math.pi * theta2) * stat.value
    elif method == "double":
        stat = realized_qv(f, "Vdouble", kappa, _shape_params(theta2, kappa), cfg)
        est = stat.value
    else:
        raise ValueError(f"unknown sigma2 method {method!r}")
    p_hat = _shape_params(theta2, kappa, sigma2=max(est, np.finfo(float).tiny))
    var = asymptotic_variance("sigma2-" + method, p_hat, r=g.ratio, cfg=cfg)
    return EstimateResult("sigma2-" + method, float(est), math.sqrt(var / _mn(f)),
                          diagnostics={"statistic": stat.value, "r": g.ratio})


def estimate_theta2(f: Field, method: str, sigma2: float, kappa: float,
                    cfg: SeriesConfig = DEFAULT_CONFIG) -> EstimateResult:
    """Diffusivity from a rescaled quadratic variation with ``sigma2`` and ``kappa`` known.

    ``sp``: ``sigma2 / (2 Vsp)``; ``t``: ``sigma2^2 / (pi Vt^2)``;
    ``r``: ``psi_inverse(Vr / sigma2, r)`` with ``r = dx / sqrt(dt)``.
    """
    g = f.grid
    if method == "sp":
        stat = realized_qv(f, "Vsp", kappa)
        _require_positive(stat.value, "Vsp")
        est = sigma2 / (2.0 * stat.value)
    elif method == "t":
        stat = realized_qv(f, "Vt", kappa)
        _require_positive(stat.value, "Vt")
        est = sigma2**2 / (math.pi * stat.value**2)
    elif method == "r":
        stat = realized_qv(f, "Vr", kappa)
        _require_positive(stat.value, "Vr")
        est = psi_inverse(stat.value / sigma2, g.ratio)
    else:
        raise ValueError(f"unknown theta2 method {method!r}")
    var = asymptotic_variance("theta2-" + method, _shape_params(est, kappa, sigma2), r=g.ratio, cfg=cfg)
    return EstimateResult("theta2-" + method, float(est), math.sqrt(var / _mn(f)),
                          diagnostics={"statistic": stat.value, "r": g.ratio})


def _require_positive(v: float, name: str) -> None:
    if not v > 0:
        raise ValueError(f"{name} must be positive to invert (got {v})")


def estimate_rho_kappa(f: Field, kappa_range: tuple[float, float] = (-60.0, 60.0),
                       n_grid: int = 2401) -> EstimateResult:
    """Least-squares fit of ``rho2 e^{-kappa y_k}`` to per-location spatial quadratic variations.

    The per-location statistics are ``m_k = 2/(N dx) sum_{i<N} (X_{t_i}(y_{k+1}) - X_{t_i}(y_k))^2``.
    For fixed ``kappa`` the optimal ``rho2`` is explicit, leaving a
    one-dimensional profile that is scanned on a grid and then refined by
    solving its stationarity equation with Brent's method.
    """
    g = f.grid
    S = increments(f, "space").values[: g.N, :]
    m = 2.0 / (g.N * g.dx) * np.sum(S * S, axis=0)
    if not np.any(m > 0):
        raise ValueError("all spatial increments are zero")
    y = g.locations[: g.M]
    rho2, kappa, info = _profile_exp_fit(m, y, kappa_range, n_grid)
    se = _rho_kappa_se(rho2, kappa, y, g.N)
    return EstimateResult("rho-kappa", np.array([rho2, kappa]), se,
                          converged=info["converged"], diagnostics=info)


def _profile_exp_fit(m, y, kappa_range, n_grid):
    def pq(k):
        e = np.exp(-k * y)
        return np.dot(m, e), np.dot(e, e), -np.dot(m * y, e), -2.0 * np.dot(y * e, e)

    def prof(k):
        P, Q, _, _ = pq(k)
        return -P * P / Q

    def stat(k):
        P, Q, dP, dQ = pq(k)
        return 2.0 * P * dP * Q - P * P * dQ

    grid = np.linspace(*kappa_range, n_grid)
    vals = np.array([prof(k) for k in grid])
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]
    converged = True
    if stat(lo) * stat(hi) < 0:
        k = optimize.brentq(stat, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    else:
        res = optimize.minimize_scalar(prof, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        k = float(res.x)
        converged = bool(0 < i < n_grid - 1)
    P, Q, _, _ = pq(k)
    return P / Q, float(k), {"converged": converged, "profile_objective": float(np.sum(m * m) + prof(k))}


def _rho_kappa_se(rho2, kappa, y, N):
    # sandwich with independent m_k, Var(m_k) = 2 rho2^2 e^{-2 kappa y_k} / N
    e = np.exp(-kappa * y)
    J = np.column_stack([e, -y * rho2 * e])
    W = 2.0 * rho2**2 * e * e / N
    try:
        A = np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError:
        return None
    cov = A @ (J.T * W) @ J @ A
    return np.sqrt(np.clip(np.diag(cov), 0.0, None))


# ----------------------------------------------------------------------------- least squares


def auto_vw(N: int, M: int) -> tuple[int, int]:
    """Coarsening factors ``v = [max(1, N/(4M^2))]``, ``w = [max(1, M/sqrt(N))]`` rounded half up."""
    v = int(math.floor(max(1.0, N / (4.0 * M * M)) + 0.5))
    w = int(math.floor(max(1.0, M / math.sqrt(N)) + 0.5))
    return v, w


@dataclass(frozen=True)
class ContrastData:
    """Per-location means entering the least-squares contrast."""

    z: np.ndarray
    means: tuple[np.ndarray, np.ndarray]
    r: float
    v: int
    w: int


def contrast_data(f: Field, v: int = 1, w: int = 1) -> ContrastData:
    """Means of ``D_{nu v, w}(i, k)^2 / sqrt(nu v dt)`` over ``i`` for ``nu = 1, 2``."""
    g = f.grid
    if v < 1 or w < 1:
        raise ValueError("v and w must be >= 1")
    if 2 * v > g.N or w > g.M:
        raise ValueError("grid too small for the requested coarsening")
    X = f.values
    y = g.locations
    means = []
    for nu in (1, 2):
        D = coarse_double_increments(X, nu * v, w)
        means.append(np.mean(D * D, axis=0) / math.sqrt(nu * v * g.dt))
    z = 0.5 * (y[: g.M + 1 - w] + y[w:])
    return ContrastData(z, (means[0], means[1]), w * g.dx / math.sqrt(v * g.dt), v, w)


def mean_curves(eta, z, r):
    """``(f1, f2)`` with ``f_nu(z) = sigma2 psi_theta2(r / sqrt(nu)) e^{-kappa z}``."""
    s2, t2, k = eta
    e = np.exp(-k * z)
    return s2 * psi(r, t2) * e, s2 * psi(r / math.sqrt(2.0), t2) * e


def contrast(eta, data: ContrastData, ridge: float = 0.0) -> float:
    """``K1 + K2 + ridge * |eta|^2 / n`` with ``n`` the number of locations.

    The ridge penalizes the residual sum of squares ``n (K1 + K2)``, which is
    the same minimizer as penalizing the per-location means with ``ridge / n``.
    """
    f1, f2 = mean_curves(eta, data.z, data.r)
    m1, m2 = data.means
    eta = np.asarray(eta, dtype=float)
    n = data.z.size
    return float(np.mean((m1 - f1) ** 2) + np.mean((m2 - f2) ** 2) + ridge * np.dot(eta, eta) / n)


class _BoxMap:
    """Unit cube <-> box; log scale for the positive components."""

    def __init__(self, box: BoxH):
        self.lo = np.asarray(box.lower, float)
        self.hi = np.asarray(box.upper, float)
        self.llo = np.log(self.lo[:2])
        self.lhi = np.log(self.hi[:2])

    def to_eta(self, x):
        x = np.clip(x, 0.0, 1.0)
        pos = np.exp(self.llo + x[:2] * (self.lhi - self.llo))
        kap = self.lo[2] + x[2] * (self.hi[2] - self.lo[2])
        return np.array([pos[0], pos[1], kap])

    def to_unit(self, eta):
        eta = np.asarray(eta, float)
        pos = (np.log(eta[:2]) - self.llo) / (self.lhi - self.llo)
        kap = (eta[2] - self.lo[2]) / (self.hi[2] - self.lo[2])
        return np.clip(np.array([pos[0], pos[1], kap]), 0.0, 1.0)


def moment_start(data: ContrastData) -> np.ndarray | None:
    """Closed-form starting value from log-linear fits of the two mean curves."""
    m1, m2 = data.means
    if np.any(m1 <= 0) or np.any(m2 <= 0) or data.z.size < 2:
        return None
    z = data.z
    n = z.size
    # common slope, separate intercepts
    A = np.zeros((2 * n, 3))
    A[:n, 0] = 1.0
    A[n:, 1] = 1.0
    A[:, 2] = -np.concatenate([z, z])
    coef, *_ = np.linalg.lstsq(A, np.log(np.concatenate([m1, m2])), rcond=None)
    a1, a2, kappa = coef
    ratio = math.exp(a1 - a2)
    r = data.r

    def q(s):
        t = math.exp(s)
        return math.log(psi(r, t) / psi(r / math.sqrt(2.0), t)) - math.log(ratio)

    try:
        s = optimize.brentq(q, math.log(1e-8), math.log(1e8))
    except ValueError:
        return None
    theta2 = math.exp(s)
    return np.array([math.exp(a1) / psi(r, theta2), theta2, kappa])


_START_FRACTIONS = ((0.5, 0.5, 0.5), (0.25, 0.75, 0.25), (0.75, 0.25, 0.75), (0.3, 0.3, 0.7))


def _residuals(eta, data: ContrastData, ridge: float) -> np.ndarray:
    f1, f2 = mean_curves(eta, data.z, data.r)
    m1, m2 = data.means
    n = data.z.size
    parts = [(m1 - f1) / math.sqrt(n), (m2 - f2) / math.sqrt(n)]
    if ridge > 0:
        parts.append(math.sqrt(ridge / n) * np.asarray(eta, float))
    return np.concatenate(parts)


def fit_contrast(data: ContrastData, box: BoxH, ridge: float, starts: int = 5,
                 tol: float = 1e-9, max_iter: int = 3000) -> tuple[np.ndarray, dict]:
    """Multi-start bounded Nelder-Mead on the contrast, polished by bounded least squares.

    Returns ``(eta, diagnostics)``.
    """
    bm = _BoxMap(box)
    x0s = []
    ms = moment_start(data)
    if ms is not None and ms[0] > 0 and ms[1] > 0:
        x0s.append(np.clip(bm.to_unit(ms), 0.02, 0.98))
    for frac in _START_FRACTIONS:
        if len(x0s) >= starts:
            break
        x0s.append(np.array(frac))
    x0s = x0s[:starts]

    def obj(x):
        return contrast(bm.to_eta(x), data, ridge)

    scale = float(np.mean(data.means[0] ** 2) + np.mean(data.means[1] ** 2)) or 1.0
    runs = []
    for x0 in x0s:
        total_it = 0
        x = x0
        fprev = obj(x)
        # absolute tolerance fixed per start; the polish step supplies the last digits
        fatol = tol * max(fprev, 1e-12 * scale)
        res = None
        for _ in range(5):
            res = optimize.minimize(obj, x, method="Nelder-Mead", bounds=[(0.0, 1.0)] * 3,
                                    options={"xatol": 1e-8, "fatol": fatol, "maxiter": max_iter,
                                             "initial_simplex": _simplex(x)})
            total_it += res.nit
            x = res.x
            # restart until a fresh simplex no longer improves the objective
            if fprev - res.fun <= tol * max(abs(fprev), 1e-300):
                break
            fprev = res.fun
        runs.append((float(res.fun), total_it, bool(res.success), x))
    best = min(range(len(runs)), key=lambda i: (runs[i][0], i))
    fbest, nit, ok, xbest = runs[best]
    eta = bm.to_eta(xbest)
    polished = False
    try:
        ls = optimize.least_squares(_residuals, eta, args=(data, ridge), bounds=(bm.lo, bm.hi),
                                    method="trf", x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                    max_nfev=2000)
        f_ls = contrast(ls.x, data, ridge)
        if f_ls <= fbest:
            eta, fbest, polished = np.asarray(ls.x, float), f_ls, True
    except ValueError as exc:
        logger.debug("least-squares polish skipped: %s", exc)
    u = bm.to_unit(eta)
    on_edge = bool(np.any(u < 1e-7) or np.any(u > 1 - 1e-7))
    diag = {"objective": fbest, "iterations": [r[1] for r in runs], "best_start": best,
            "starts": len(runs), "at_boundary": on_edge, "optimizer_success": ok, "polished": polished}
    return eta, diag


def _simplex(x, step=0.05):
    pts = [np.array(x, float)]
    for j in range(3):
        p = np.array(x, float)
        p[j] = p[j] + step if p[j] + step <= 1.0 else p[j] - step
        pts.append(p)
    return np.array(pts)


def estimate_eta_ls(f: Field, box: BoxH = BoxH(), ridge: float | None = None,
                    starts: int = 5, cfg: SeriesConfig = DEFAULT_CONFIG) -> EstimateResult:
    """Least-squares estimator of ``(sigma2, theta2, kappa)`` from one- and two-step double increments.

    ``ridge`` defaults to ``1 / (N M)``.
    """
    g = f.grid
    lam = 1.0 / (g.N * g.M) if ridge is None else float(ridge)
    res = _eta_fit(f, 1, 1, box, lam, starts, cfg, method="eta-ls")
    return res


def estimate_eta_avg(f: Field, box: BoxH = BoxH(), ridge: float | None = None, v: int | None = None,
                     w: int | None = None, starts: int = 5,
                     cfg: SeriesConfig = DEFAULT_CONFIG) -> EstimateResult:
    """Least-squares estimator on coarsened double increments ``D_{nu v, w}``.

    ``v`` and ``w`` default to :func:`auto_vw`; ``ridge`` defaults to
    ``1 / min(M^3, N^{3/2})``.
    """
    g = f.grid
    av, aw = auto_vw(g.N, g.M)
    v = av if v is None else int(v)
    w = aw if w is None else int(w)
    lam = 1.0 / min(g.M**3, g.N**1.5) if ridge is None else float(ridge)
    return _eta_fit(f, v, w, box, lam, starts, cfg, method="eta-avg")


def _eta_fit(f, v, w, box, ridge, starts, cfg, method):
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    g = f.grid
    data = contrast_data(f, v, w)
    eta, diag = fit_contrast(data, box, ridge, starts)
    diag.update({"v": v, "w": w, "r": data.r, "ridge": ridge})
    converged = diag["optimizer_success"] and not diag["at_boundary"]
    se = None
    try:
        omega = asymptotic_variance("eta-ls", _shape_params(eta[1], eta[2], eta[0]), r=data.r, b=g.b, cfg=cfg)
        n_eff = (g.M / w) * (g.N / v)
        se = np.sqrt(np.clip(np.diag(omega), 0.0, None) / n_eff)
    except (ValueError, np.linalg.LinAlgError) as exc:
        diag["se_error"] = str(exc)
    return EstimateResult(method, eta, se, converged=converged, diagnostics=diag)


def theta1_from_eta(e: EstimateResult) -> float:
    """Advection estimate ``theta2_hat * kappa_hat``."""
    est = np.asarray(e.estimate, dtype=float)
    if est.shape != (3,):
        raise ValueError("need a full (sigma2, theta2, kappa) estimate")
    return float(est[1] * est[2])


# ----------------------------------------------------------------------------- asymptotic variances


@dataclass(frozen=True)
class LatticeSums:
    """``A_r = sum A^2``, ``B_r = sum B^2``, ``C_r = sum C^2`` and ``<A, B>`` over the lattice."""

    A: float
    B: float
    C: float
    AB: float


def lattice_sums(r: float, theta2: float, cfg: SeriesConfig = DEFAULT_CONFIG) -> LatticeSums:
    """Lattice sums of ``A_ik = -Lambda_ik(r/sqrt(theta2)) / sqrt(theta2)`` and its time-shifted combinations.

    ``B_ik = 2 A_ik + A_{i-1,k} + A_{i+1,k}`` and ``C_ik = A_ik + A_{i-1,k}``,
    the first index being the time lag.
    """
    h = r / math.sqrt(theta2)
    L = max(C_of_h_detail(h, cfg).lattice_cut, cfg.lattice_cut)
    quad = -lambda_grid(L, h) / math.sqrt(theta2)
    full = np.concatenate([quad[:0:-1], quad], axis=0)
    full = np.concatenate([full[:, :0:-1], full], axis=1)
    A = np.pad(full, ((1, 1), (0, 0)))
    Bm = 2.0 * A[1:-1] + A[:-2] + A[2:]
    Cm = A[1:] + A[:-1]
    Ai = A[1:-1]
    return LatticeSums(float(np.sum(Ai * Ai)), float(np.sum(Bm * Bm)), float(np.sum(Cm * Cm)),
                       float(np.sum(Ai * Bm)))


def _weighted_moments(a: float, b: float) -> np.ndarray:
    """``(1/(1-2b)) int_b^{1-b} z^n e^{-a z} dz`` for ``n = 0, 1, 2``."""
    out = np.empty(3)
    for n in range(3):
        val, _ = integrate.quad(lambda z, n=n: z**n * math.exp(-a * z), b, 1.0 - b,
                                epsabs=0.0, epsrel=1e-13, limit=200)
        out[n] = val / (1.0 - 2.0 * b)
    return out


def omega_matrices(p: Params, r: float, b: float, cfg: SeriesConfig = DEFAULT_CONFIG):
    """``(U, V, Omega)`` of the least-squares estimator at ratio ``r`` and margin ``b``."""
    if not (r > 0 and 0 < b < 0.5):
        raise ValueError("need r > 0 and 0 < b < 1/2")
    s2, t2, k = p.sigma2, p.theta2, p.kappa
    coeff = []
    for nu in (1, 2):
        ri = r / math.sqrt(nu)
        ps, dps = float(psi(ri, t2)), float(psi_dtheta2(ri, t2))
        # gradient components e^{-kappa z} (alpha + beta z)
        coeff.append((np.array([ps, s2 * dps, 0.0]), np.array([0.0, 0.0, -s2 * ps])))
    mg = _weighted_moments(2.0 * k, b)
    mh = _weighted_moments(4.0 * k, b)

    def inner(c1, c2, mom):
        a1, b1 = c1
        a2, b2 = c2
        return (np.outer(a1, a2) * mom[0] + (np.outer(a1, b2) + np.outer(b1, a2)) * mom[1]
                + np.outer(b1, b2) * mom[2])

    V = 2.0 * (inner(coeff[0], coeff[0], mg) + inner(coeff[1], coeff[1], mg))
    ls = lattice_sums(r, t2, cfg)
    h11 = inner(coeff[0], coeff[0], mh)
    h22 = inner(coeff[1], coeff[1], mh)
    h12 = inner(coeff[0], coeff[1], mh)
    U = 4.0 * s2 * s2 * (2.0 * ls.A * h11 + ls.B * h22 + math.sqrt(2.0) * ls.C * (h12 + h12.T))
    Vinv = np.linalg.inv(V)
    omega = Vinv @ U @ Vinv
    return U, V, 0.5 * (omega + omega.T)


def asymptotic_variance(method: str, p: Params, r: float | None = None, b: float | None = None,
                        cfg: SeriesConfig = DEFAULT_CONFIG):
    """Asymptotic variance of ``sqrt(MN) (estimate - truth)``.

    Methods ``sigma2-sp``, ``sigma2-t``, ``sigma2-double``, ``theta2-sp``,
    ``theta2-t``, ``theta2-r`` return scalars; ``eta-ls`` returns the 3x3
    matrix ``V^-1 U V^-1``.
    """
    s4 = p.sigma2**2
    t2 = p.theta2
    if method == "sigma2-sp":
        return 2.0 * s4
    if method == "sigma2-t":
        return B_constant(cfg) * s4
    if method == "theta2-sp":
        return 2.0 * t2 * t2
    if method == "theta2-t":
        return 4.0 * t2 * t2 * B_constant(cfg)
    if r is None or not r > 0:
        raise ValueError(f"method {method!r} needs a ratio r > 0")
    if method == "sigma2-double":
        return C_of_h(r / math.sqrt(t2), cfg) * s4
    if method == "theta2-r":
        return C_of_h(r / math.sqrt(t2), cfg) * (float(psi(r, t2)) / float(psi_dtheta2(r, t2))) ** 2
    if method == "eta-ls":
        if b is None:
            raise ValueError("eta-ls needs the margin b")
        return omega_matrices(p, r, b, cfg)[2]
    raise ValueError(f"unknown method {method!r}")
