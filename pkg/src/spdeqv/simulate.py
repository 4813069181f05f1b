"""Sampling solution fields on an observation grid.

Two samplers target the same Gaussian law:

* :func:`simulate_spectral` truncates the eigen-expansion at ``K`` modes and
  propagates each Fourier coefficient with its exact AR(1) transition.
* :func:`simulate_exact` factorizes the full covariance matrix of the grid
  values; it is exact but limited to small grids.

Random numbers for the spectral sampler are keyed by ``(seed, mode, time
index)``: modes are grouped into blocks of :data:`MODE_BLOCK`, each block owns
an independent Philox stream, and draws are laid out time-major inside the
block. Raising ``K`` or ``N`` therefore extends, and never reshuffles, the
variates used for existing modes and times.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .model import GridSpec, Params, covariance_blocks, eigenfunction_eval, validate_params

logger = logging.getLogger(__name__)

MODE_BLOCK = 256
_CHUNK_ELEMS = 1 << 22


class TruncationWarning(UserWarning):
    """Spectral cutoff below the spatial resolution of the grid."""


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    Attributes
    ----------
    K : int or None
        Spectral cutoff; ``None`` selects ``max(4M, 1000)``.
    seed : int
        Master seed (64-bit).
    scheme : {"spectral", "exact"}
    max_points : int
        Largest grid (in points) the exact sampler will factorize.
    """

    K: int | None = None
    seed: int = 0
    scheme: str = "spectral"
    max_points: int = 4096

    def __post_init__(self):
        if self.K is not None and self.K < 1:
            raise ValueError("K must be >= 1")
        if self.scheme not in ("spectral", "exact"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class Field:
    """Grid values ``X_{t_i}(y_k)`` stored as an ``(N+1, M+1)`` array."""

    values: np.ndarray
    grid: GridSpec
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.grid.N + 1, self.grid.M + 1)
        if self.values.shape != expected:
            raise ValueError(f"field shape {self.values.shape} does not match grid {expected}")

    def scaled(self, c: float) -> "Field":
        return Field(c * self.values, self.grid, dict(self.provenance))


def default_K(M: int) -> int:
    return max(4 * M, 1000)


def resolve_K(g: GridSpec, c: SimConfig) -> int:
    if c.K is None:
        K = default_K(g.M)
        logger.warning(
            "using default spectral cutoff K=%d; spatial-increment statistics are biased "
            "by truncation unless K is much larger than M", K)
        return K
    if c.K < g.M:
        warnings.warn(f"spectral cutoff K={c.K} is below M={g.M}", TruncationWarning, stacklevel=3)
    return int(c.K)


def _block_normals(seed: int, block: int, n_times: int) -> np.ndarray:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block),))
    gen = np.random.Generator(np.random.Philox(ss))
    return gen.standard_normal((n_times, MODE_BLOCK))


def mode_normals(seed: int, modes: np.ndarray, n_times: int) -> np.ndarray:
    """Standard normals ``Z[i, j]`` assigned to time index ``i`` and mode ``modes[j]`` (1-based)."""
    modes = np.asarray(modes, dtype=np.int64)
    idx = modes - 1
    blocks = idx // MODE_BLOCK
    out = np.empty((n_times, modes.size))
    for b in np.unique(blocks):
        sel = blocks == b
        out[:, sel] = _block_normals(seed, int(b), n_times)[:, idx[sel] % MODE_BLOCK]
    return out


def coefficient_paths(p: Params, g: GridSpec, modes: np.ndarray, seed: int) -> np.ndarray:
    """Stationary OU paths ``u_l(t_i)`` for the given modes, shape ``(N+1, len(modes))``."""
    d = validate_params(p)
    lam = d.eigenvalue(modes)
    sigma = math.sqrt(p.sigma2)
    phi = np.exp(-lam * g.dt)
    innov = sigma * np.sqrt(-np.expm1(-2.0 * lam * g.dt) / (2.0 * lam))
    u = mode_normals(seed, modes, g.N + 1)
    u[0] *= sigma / np.sqrt(2.0 * lam)
    for i in range(g.N):
        u[i + 1] *= innov
        u[i + 1] += phi * u[i]
    return u


def simulate_spectral(p: Params, g: GridSpec, c: SimConfig = SimConfig()) -> Field:
    """Sample the ``K``-mode truncated field ``sum_{l<=K} u_l(t_i) e_l(y_k)``."""
    d = validate_params(p)
    K = resolve_K(g, c)
    y = g.locations
    X = np.zeros((g.N + 1, g.M + 1))
    per_chunk = max(MODE_BLOCK, (_CHUNK_ELEMS // (g.N + 1)) // MODE_BLOCK * MODE_BLOCK)
    for start in range(1, K + 1, per_chunk):
        modes = np.arange(start, min(K, start + per_chunk - 1) + 1)
        u = coefficient_paths(p, g, modes, c.seed)
        E = eigenfunction_eval(modes[:, None], y[None, :], d)
        X += u @ E
    return Field(X, g, {"scheme": "spectral", "K": K, "seed": int(c.seed)})


def grid_covariance(p: Params, g: GridSpec, tol: float = 1e-13) -> np.ndarray:
    """Covariance matrix of the flattened (time-major) grid values."""
    blocks = covariance_blocks(g.times[: g.N + 1] - g.times[0], g.locations, g.locations, p, tol=tol)
    n, m = g.N + 1, g.M + 1
    lag = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    return blocks[lag].transpose(0, 2, 1, 3).reshape(n * m, n * m)


class ExactSampler:
    """Exact Gaussian sampler on a small grid; the factorization is reused across draws."""

    def __init__(self, p: Params, g: GridSpec, max_points: int = 4096, tol: float = 1e-13):
        if g.n_points > max_points:
            raise ValueError(f"grid has {g.n_points} points, exact sampler cap is {max_points}")
        self.params = p
        self.grid = g
        cov = grid_covariance(p, g, tol)
        self.active = np.flatnonzero(np.diag(cov) > 0.0)
        self.factor = _jittered_cholesky(cov[np.ix_(self.active, self.active)])

    def draw_many(self, n: int, seed: int) -> np.ndarray:
        """``n`` independent fields as an ``(n, N+1, M+1)`` array."""
        gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
        z = gen.standard_normal((n, self.active.size))
        out = np.zeros((n, self.grid.n_points))
        out[:, self.active] = z @ self.factor.T
        return out.reshape(n, self.grid.N + 1, self.grid.M + 1)

    def draw(self, seed: int) -> Field:
        return Field(self.draw_many(1, seed)[0], self.grid, {"scheme": "exact", "seed": int(seed)})


def simulate_exact(p: Params, g: GridSpec, c: SimConfig = SimConfig(scheme="exact")) -> Field:
    """One exact draw of the grid values from the full covariance matrix."""
    return ExactSampler(p, g, c.max_points).draw(c.seed)


def simulate(p: Params, g: GridSpec, c: SimConfig) -> Field:
    if c.scheme == "exact":
        return simulate_exact(p, g, c)
    return simulate_spectral(p, g, c)


def _jittered_cholesky(cov: np.ndarray, retries: int = 3) -> np.ndarray:
    """Cholesky factor, adding ``1e-12 * trace / n`` (then x10 per retry) on failure."""
    n = cov.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    jitter = 1e-12 * np.trace(cov) / n
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    for _ in range(retries):
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(n))
        except np.linalg.LinAlgError:
            jitter *= 10.0
    smallest = float(np.linalg.eigvalsh(cov)[0])
    raise np.linalg.LinAlgError(
        f"covariance factorization failed after jitter; smallest eigenvalue estimate {smallest:.3e}")
