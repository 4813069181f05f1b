"""Increments, realized quadratic variations and their exact covariances."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import GridSpec, Params, covariance_blocks, field_covariance, validate_params
from .series import DEFAULT_CONFIG, SeriesConfig, phi_norm
from .simulate import Field

KINDS = ("time", "space", "double")
QV_KINDS = ("Vt", "Vsp", "Vdouble", "Vr")


@dataclass(frozen=True)
class IncrementArray:
    """Increments of a field.

    ``values`` has shape ``(N, M+1)`` for time, ``(N+1, M)`` for space and
    ``(N, M)`` for double increments.
    """

    kind: str
    values: np.ndarray
    grid: GridSpec


@dataclass(frozen=True)
class QvStatistic:
    """A rescaled realized quadratic variation and the normalization it used."""

    kind: str
    value: float
    normalization: float


def increments(f: Field, kind: str) -> IncrementArray:
    """First differences in time or space, or mixed space-time double increments."""
    X = f.values
    g = f.grid
    if kind == "time":
        vals = X[1:] - X[:-1]
    elif kind == "space":
        vals = X[:, 1:] - X[:, :-1]
    elif kind == "double":
        vals = (X[1:, 1:] - X[1:, :-1]) - (X[:-1, 1:] - X[:-1, :-1])
    else:
        raise ValueError(f"unknown increment kind {kind!r}")
    if vals.size == 0:
        raise ValueError("degenerate grid")
    return IncrementArray(kind, vals, g)


def coarse_double_increments(X: np.ndarray, v: int, w: int) -> np.ndarray:
    """Double increments over ``v`` time steps and ``w`` space steps at every base point."""
    return (X[v:, w:] - X[v:, :-w]) - (X[:-v, w:] - X[:-v, :-w])


def realized_qv(f: Field, kind: str, kappa: float, params: Params | None = None,
                cfg: SeriesConfig = DEFAULT_CONFIG) -> QvStatistic:
    """Rescaled realized quadratic variations.

    ``Vt``
        ``(1/(M N sqrt(dt))) sum_{i<N, k<M} e^{kappa y_k} (X_{t_{i+1}}(y_k) - X_{t_i}(y_k))^2``
    ``Vsp``
        ``(1/(N M dx)) sum_{i<N, k<M} e^{kappa y_k} (X_{t_i}(y_{k+1}) - X_{t_i}(y_k))^2``
    ``Vdouble``
        ``(1/(M N Phi(dx, dt))) sum e^{kappa y_k} D_ik^2``; needs ``params`` for ``Phi``.
    ``Vr``
        ``(1/(M N sqrt(dt))) sum e^{kappa (y_k + y_{k+1})/2} D_ik^2``
    """
    g = f.grid
    y = g.locations
    N, M = g.N, g.M
    if kind == "Vt":
        inc = increments(f, "time").values[:, :M]
        wts = np.exp(kappa * y[:M])
        norm = M * N * math.sqrt(g.dt)
    elif kind == "Vsp":
        inc = increments(f, "space").values[:N, :]
        wts = np.exp(kappa * y[:M])
        norm = N * M * g.dx
    elif kind == "Vdouble":
        if params is None:
            raise ValueError("Vdouble needs params to evaluate Phi")
        inc = increments(f, "double").values
        wts = np.exp(kappa * y[:M])
        norm = M * N * phi_norm(g.dx, g.dt, params, cfg)
    elif kind == "Vr":
        inc = increments(f, "double").values
        wts = np.exp(kappa * 0.5 * (y[:M] + y[1:]))
        norm = M * N * math.sqrt(g.dt)
    else:
        raise ValueError(f"unknown statistic {kind!r}")
    # np.sum reduces with pairwise summation
    total = float(np.sum(np.sum(inc * inc, axis=0) * wts))
    return QvStatistic(kind, total / norm, norm)


def _stencil(kind: str, i: int, k: int):
    if kind == "time":
        return [((i + 1, k), 1.0), ((i, k), -1.0)]
    if kind == "space":
        return [((i, k + 1), 1.0), ((i, k), -1.0)]
    if kind == "double":
        return [((i + 1, k + 1), 1.0), ((i + 1, k), -1.0), ((i, k + 1), -1.0), ((i, k), 1.0)]
    raise ValueError(f"unknown increment kind {kind!r}")


def _check_index(g: GridSpec, kind: str, i: int, k: int) -> None:
    imax = g.N if kind == "space" else g.N - 1
    kmax = g.M if kind == "time" else g.M - 1
    if not (0 <= i <= imax and 0 <= k <= kmax):
        raise IndexError(f"increment index ({i}, {k}) out of range for kind {kind!r}")


def increment_covariance_exact(g: GridSpec, p: Params, kind: str, ik: tuple[int, int],
                               jl: tuple[int, int], tol: float = 1e-13) -> float:
    """Covariance of two increments of the same kind from the eigen-series."""
    validate_params(p)
    _check_index(g, kind, *ik)
    _check_index(g, kind, *jl)
    t = g.times
    y = g.locations
    total = 0.0
    for (a, ca) in _stencil(kind, *ik):
        for (b, cb) in _stencil(kind, *jl):
            total += ca * cb * float(field_covariance(t[a[0]], y[a[1]], t[b[0]], y[b[1]], p, tol=tol))
    return total


def increment_covariance_matrix(g: GridSpec, p: Params, kind: str, tol: float = 1e-13) -> np.ndarray:
    """Full covariance matrix of all increments of one kind, flattened time-major."""
    from .simulate import grid_covariance

    cov = grid_covariance(p, g, tol)
    n, m = g.N + 1, g.M + 1
    rows = []
    shape = {"time": (g.N, m), "space": (n, g.M), "double": (g.N, g.M)}[kind]
    for i in range(shape[0]):
        for k in range(shape[1]):
            r = np.zeros(n * m)
            for (a, c) in _stencil(kind, i, k):
                r[a[0] * m + a[1]] += c
            rows.append(r)
    A = np.array(rows)
    return A @ cov @ A.T


def double_increment_lag_covariances(g: GridSpec, p: Params, tol: float = 1e-13) -> np.ndarray:
    """``R[J, k, l] = Cov(D_{i,k}, D_{i+J,l})`` for time lags ``J = 0..N-1``.

    Built from the stationary field covariance blocks at lags ``0..N``.
    """
    lags = np.arange(g.N + 1) * g.dt
    B = covariance_blocks(lags, g.locations, g.locations, p, tol=tol)
    S = (B[:, 1:, 1:] - B[:, 1:, :-1]) - (B[:, :-1, 1:] - B[:, :-1, :-1])
    J = np.arange(g.N)
    return 2.0 * S[J] - S[J + 1] - S[np.abs(J - 1)]


@dataclass(frozen=True)
class QvMoments:
    """Exact mean and variance of the double-increment quadratic variation."""

    mean: float
    variance: float
    frob_sq: float
    phi: float


def double_qv_moments(g: GridSpec, p: Params, cfg: SeriesConfig = DEFAULT_CONFIG,
                      tol: float = 1e-13) -> QvMoments:
    """Exact ``E`` and ``Var`` of ``Vdouble`` via Isserlis: ``Var = 2 ||Sigma~||_F^2 / (M N Phi)^2``.

    ``Sigma~`` is the covariance of the weighted increments ``e^{kappa y_k / 2} D_ik``;
    time-stationarity reduces the Frobenius norm to a sum over lags.
    """
    R = double_increment_lag_covariances(g, p, tol)
    y = g.locations[: g.M]
    w = np.exp(0.5 * p.kappa * y)
    Rt = R * w[None, :, None] * w[None, None, :]
    mult = 2.0 * (g.N - np.arange(g.N))
    mult[0] = g.N
    frob = float(np.sum(mult * np.sum(Rt * Rt, axis=(1, 2))))
    phi = phi_norm(g.dx, g.dt, p, cfg)
    norm = g.M * g.N * phi
    mean = g.N * float(np.trace(Rt[0])) / norm
    return QvMoments(mean, 2.0 * frob / norm**2, frob, phi)


@dataclass(frozen=True)
class CltDiagnostic:
    spectral_norm_sq: float
    variance: float
    ratio: float


def clt_diagnostic(cov, rtol: float = 1e-12, max_iter: int = 10_000) -> CltDiagnostic:
    """Ratio ``||Sigma||_2^2 / Var(sum Z_i^2)`` for a Gaussian vector with covariance ``Sigma``.

    ``Var(sum Z_i^2) = 2 ||Sigma||_F^2`` and the spectral norm is found by power
    iteration. A ratio tending to 0 along a triangular array is the condition
    for asymptotic normality of the sum of squares.
    """
    S = np.asarray(cov, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("covariance must be a square matrix")
    if not np.allclose(S, S.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(S).max(initial=0.0))):
        raise ValueError("covariance must be symmetric")
    n = S.shape[0]
    var = 2.0 * float(np.sum(S * S))
    if var == 0.0:
        return CltDiagnostic(0.0, 0.0, 0.0)
    v = 1.0 + 1e-3 * np.arange(n) / max(n, 1)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        wv = S @ v
        nrm = float(np.linalg.norm(wv))
        if nrm == 0.0:
            break
        v = wv / nrm
        if abs(nrm - est) <= rtol * nrm:
            est = nrm
            break
        est = nrm
    return CltDiagnostic(est * est, var, est * est / var)
