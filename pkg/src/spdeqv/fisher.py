"""Fisher information of discretely observed Ornstein-Uhlenbeck coefficients and minimax rates."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FisherOUInput:
    """Discrete sample ``u(i dt), i = 0..N`` of ``du = -a mu u dt + nu sqrt(mu) dB``, stationary start.

    ``dt`` defaults to ``1 / N``.
    """

    a: float
    mu: float
    nu2: float
    N: int
    dt: float | None = None

    def __post_init__(self):
        if not (self.a > 0 and self.mu > 0 and self.nu2 > 0 and self.N >= 1):
            raise ValueError("a, mu, nu2 must be positive and N >= 1")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def step(self) -> float:
        return 1.0 / self.N if self.dt is None else float(self.dt)


def ou_fisher(inp: FisherOUInput) -> np.ndarray:
    """Fisher information of the whole sample for ``(mu, nu2)``.

    Each of the ``N`` transitions contributes
    ``a^2 dt^2 (q^2 + q) / (1 - q)^2`` and ``a dt q / (nu2 (1 - q))`` with
    ``q = e^{-2 mu a dt}``; the stationary start adds ``1/(2 nu2^2)`` to the
    ``nu2`` entry only.
    """
    a, mu, nu2, N, dt = inp.a, inp.mu, inp.nu2, inp.N, inp.step
    x = 2.0 * mu * a * dt
    q = math.exp(-x)
    one_minus_q = -math.expm1(-x)
    i11 = N * (a * dt) ** 2 * (q * q + q) / one_minus_q**2
    i12 = N * a * dt * q / (nu2 * one_minus_q)
    i22 = (N + 1) / (2.0 * nu2 * nu2)
    return np.array([[i11, i12], [i12, i22]])


def ou_log_likelihood(paths: np.ndarray, mu: float, nu2: float, a: float, dt: float) -> np.ndarray:
    """Exact Gaussian log-likelihood of each row of ``paths`` (shape ``(n, N+1)``)."""
    paths = np.atleast_2d(paths)
    phi = math.exp(-mu * a * dt)
    v = nu2 * -math.expm1(-2.0 * mu * a * dt) / (2.0 * a)
    v0 = nu2 / (2.0 * a)
    x0 = paths[:, 0]
    resid = paths[:, 1:] - phi * paths[:, :-1]
    n_tr = resid.shape[1]
    ll0 = -0.5 * math.log(2.0 * math.pi * v0) - 0.5 * x0 * x0 / v0
    llt = -0.5 * n_tr * math.log(2.0 * math.pi * v) - 0.5 * np.sum(resid * resid, axis=1) / v
    return ll0 + llt


def sample_ou_paths(inp: FisherOUInput, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` stationary paths of the coefficient process at the sample times."""
    a, mu, nu2, N, dt = inp.a, inp.mu, inp.nu2, inp.N, inp.step
    phi = math.exp(-mu * a * dt)
    sd = math.sqrt(nu2 * -math.expm1(-2.0 * mu * a * dt) / (2.0 * a))
    z = rng.standard_normal((n, N + 1))
    out = np.empty_like(z)
    out[:, 0] = math.sqrt(nu2 / (2.0 * a)) * z[:, 0]
    for i in range(N):
        out[:, i + 1] = phi * out[:, i] + sd * z[:, i + 1]
    return out


def mc_fisher(inp: FisherOUInput, n_paths: int, seed: int = 0, rel_step: float = 1e-3) -> np.ndarray:
    """Negative mean Hessian of the exact log-likelihood by central differences over simulated paths."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    paths = sample_ou_paths(inp, n_paths, rng)
    theta = np.array([inp.mu, inp.nu2])
    h = rel_step * theta

    def ll(t):
        return float(np.mean(ou_log_likelihood(paths, t[0], t[1], inp.a, inp.step)))

    H = np.empty((2, 2))
    for i in range(2):
        ei = np.zeros(2)
        ei[i] = h[i]
        H[i, i] = (ll(theta + ei) - 2.0 * ll(theta) + ll(theta - ei)) / h[i] ** 2
        for j in range(i + 1, 2):
            ej = np.zeros(2)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (ll(theta + ei + ej) - ll(theta + ei - ej) - ll(theta - ei + ej)
                                 + ll(theta - ei - ej)) / (4.0 * h[i] * h[j])
    return -H


def mu_nu2_jacobian(sigma2: float, rho2: float) -> np.ndarray:
    """Jacobian of ``(sigma2, rho2) -> (mu, nu2) = (pi^2 sigma2 / rho2, rho2 / pi^2)``."""
    p2 = math.pi**2
    return np.array([[p2 / rho2, -p2 * sigma2 / rho2**2], [0.0, 1.0 / p2]])


def spectral_information(N: int, M: int, sigma2: float, rho2: float) -> np.ndarray:
    """Information for ``(mu, nu2)`` from the first ``M`` Fourier modes observed at ``N+1`` times."""
    if N < 1 or M < 1:
        raise ValueError("N and M must be >= 1")
    if not (sigma2 > 0 and rho2 > 0):
        raise ValueError("sigma2 and rho2 must be positive")
    mu = math.pi**2 * sigma2 / rho2
    nu2 = rho2 / math.pi**2
    dt = 1.0 / N
    ell = np.arange(1, M + 1, dtype=float)
    x = 2.0 * mu * ell**2 * dt
    q = np.exp(-x)
    omq = -np.expm1(-x)
    i11 = N * float(np.sum((ell**2 * dt) ** 2 * (q * q + q) / omq**2))
    i12 = N * float(np.sum(ell**2 * dt * q / omq)) / nu2
    i22 = (N + 1) * M / (2.0 * nu2 * nu2)
    return np.array([[i11, i12], [i12, i22]])


def spectral_fisher_diag(N: int, M: int, sigma2: float, rho2: float) -> tuple[float, float]:
    """Diagonal ``(J(sigma2), J(rho2))`` of ``A^T I A`` for the spectral observation scheme."""
    I = spectral_information(N, M, sigma2, rho2)
    A = mu_nu2_jacobian(sigma2, rho2)
    J = A.T @ I @ A
    return float(J[0, 0]), float(J[1, 1])


def minimax_rate(M: int, N: int) -> float:
    """``N^{-3/4}`` when ``M >= sqrt(N)``, else ``(M^3 log(N / M^2))^{-1/2}``."""
    if M < 2 or N < 2:
        raise ValueError("M and N must be >= 2")
    if M * M >= N:
        return N ** -0.75
    return (M**3 * math.log(N / (M * M))) ** -0.5
