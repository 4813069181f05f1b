import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spdeqv.fisher import (FisherOUInput, minimax_rate, mc_fisher, mu_nu2_jacobian, ou_fisher,
                           ou_log_likelihood, sample_ou_paths, spectral_fisher_diag, spectral_information)


def test_single_observation_scale_entry():
    # one transition plus the start: (N + 1) / (2 nu2^2) with nu2 = 1
    assert ou_fisher(FisherOUInput(1.0, 1.0, 1.0, N=1))[1, 1] == 1.0


def test_small_mesh_limit():
    # q -> 1: per transition 1 / (2 mu^2) for mu and 1 / (2 mu nu2) for the cross term
    a, mu, nu2 = 1.0, 2.0, 0.5
    N = 10**6
    I = ou_fisher(FisherOUInput(a, mu, nu2, N))
    assert I[0, 0] / N == pytest.approx(1 / (2 * mu * mu), rel=1e-5)
    assert I[0, 1] / N == pytest.approx(1 / (2 * mu * nu2), rel=1e-5)


@given(a=st.floats(0.1, 10), mu=st.floats(0.1, 10), nu2=st.floats(0.1, 10), N=st.integers(1, 500))
def test_information_psd(a, mu, nu2, N):
    I = ou_fisher(FisherOUInput(a, mu, nu2, N))
    assert np.allclose(I, I.T)
    assert I[0, 0] > 0 and I[1, 1] > 0
    assert np.linalg.det(I) >= -1e-9 * I[0, 0] * I[1, 1]


def test_input_validation():
    with pytest.raises(ValueError):
        FisherOUInput(0.0, 1.0, 1.0, 5)
    with pytest.raises(ValueError):
        FisherOUInput(1.0, 1.0, 1.0, 0)
    with pytest.raises(ValueError):
        FisherOUInput(1.0, 1.0, 1.0, 5, dt=-1.0)
    assert FisherOUInput(1.0, 1.0, 1.0, 4).step == 0.25
    assert FisherOUInput(1.0, 1.0, 1.0, 4, dt=0.1).step == 0.1


def test_monte_carlo_hessian_agrees():
    inp = FisherOUInput(1.0, 2.0, 0.5, 50)
    I = ou_fisher(inp)
    assert I == pytest.approx(np.array([[6.0065, 24.013], [24.013, 102.0]]), rel=1e-4)
    H = mc_fisher(inp, 20_000, seed=3)
    assert np.allclose(H, I, rtol=0.05)


def test_log_likelihood_matches_scipy():
    from scipy.stats import multivariate_normal
    a, mu, nu2, dt = 1.5, 0.7, 0.3, 0.2
    n = 6
    t = np.arange(n) * dt
    cov = nu2 / (2 * a) * np.exp(-mu * a * np.abs(t[:, None] - t[None, :]))
    x = np.random.default_rng(0).normal(size=(3, n))
    ref = multivariate_normal(np.zeros(n), cov).logpdf(x)
    assert np.allclose(ou_log_likelihood(x, mu, nu2, a, dt), ref, rtol=1e-10)


def test_sample_paths_stationary():
    inp = FisherOUInput(2.0, 1.0, 0.4, 10)
    P = sample_ou_paths(inp, 50_000, np.random.default_rng(1))
    assert P.var(axis=0) == pytest.approx(np.full(11, 0.1), rel=0.04)


def test_jacobian_round_trip():
    s2, r2 = 0.1, 0.2
    A = mu_nu2_jacobian(s2, r2)
    h = 1e-7

    def fwd(s, r):
        return np.array([math.pi**2 * s / r, r / math.pi**2])

    num = np.column_stack([(fwd(s2 + h, r2) - fwd(s2 - h, r2)) / (2 * h),
                           (fwd(s2, r2 + h) - fwd(s2, r2 - h)) / (2 * h)])
    assert np.allclose(A, num, rtol=1e-6)


def test_spectral_information_single_mode_matches_ou():
    s2, r2, N = 0.1, 0.2, 40
    I = spectral_information(N, 1, s2, r2)
    ref = ou_fisher(FisherOUInput(1.0, math.pi**2 * s2 / r2, r2 / math.pi**2, N))
    assert np.allclose(I, ref, rtol=1e-13)


def test_spectral_information_monotone():
    prev = None
    for M in (2, 4, 8, 16):
        J = spectral_fisher_diag(64, M, 0.1, 0.2)
        if prev is not None:
            assert J[0] > prev[0] and J[1] > prev[1]
        prev = J
    with pytest.raises(ValueError):
        spectral_information(0, 3, 0.1, 0.2)
    with pytest.raises(ValueError):
        spectral_information(3, 3, -0.1, 0.2)


def test_rho2_information_cubic_in_M():
    vals = [spectral_fisher_diag(M**4, M, 0.1, 0.2)[1] / M**3 for M in (8, 16, 32)]
    assert max(vals) / min(vals) < 2


@pytest.mark.parametrize("M,N,rate", [(10, 100, 100**-0.75), (32, 1024, 1024**-0.75),
                                      (4, 1600, (64 * math.log(100)) ** -0.5)])
def test_minimax_rate(M, N, rate):
    assert minimax_rate(M, N) == pytest.approx(rate)


def test_minimax_rate_validation():
    with pytest.raises(ValueError):
        minimax_rate(1, 10)


def test_spectral_information_monotone_in_N():
    vals = [spectral_fisher_diag(N, 8, 0.1, 0.2) for N in (16, 64, 256, 1024)]
    assert all(b[0] >= a[0] and b[1] >= a[1] for a, b in zip(vals, vals[1:]))


def test_reparametrization_recovers_mu_nu2_information():
    I = spectral_information(100, 6, 0.1, 0.2)
    A = mu_nu2_jacobian(0.1, 0.2)
    J = A.T @ I @ A
    Ainv = np.linalg.inv(A)
    assert np.allclose(Ainv.T @ J @ Ainv, I, rtol=1e-12)


def test_sigma2_information_order():
    vals = [spectral_fisher_diag(N, int(4 * math.sqrt(N)), 0.1, 0.2)[0] / N**1.5 for N in (64, 256, 1024)]
    assert max(vals) / min(vals) < 2


def test_rho2_leading_terms_cancel():
    # J(rho2) / (M N) = O(M^3 / M^5) at N = M^4
    Ms = (4, 8, 16, 32)
    ratios = [spectral_fisher_diag(M**4, M, 0.1, 0.2)[1] / (M * M**4) for M in Ms]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
    scaled = [q * M * M for q, M in zip(ratios, Ms)]
    assert max(scaled) / min(scaled) < 2


def test_minimax_rate_examples():
    assert minimax_rate(100, 100) == pytest.approx(0.0316, abs=1e-4)
    for M in (4, 8, 16):
        assert minimax_rate(M, M * M) == pytest.approx((M * M**2) ** -0.5, rel=1e-12)
    for M in range(2, 40, 3):
        for N in (16, 100, 1000, 10**4, 10**5):
            assert minimax_rate(M, N) >= (M * N) ** -0.5 * (1 - 1e-12)
