import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spdeqv.model import (GridSpec, ParameterError, Params, cosine_series_closed, covariance_blocks,
                          eigenfunction_eval, field_covariance, ito_coefficients,
                          spatial_covariance_closed, truncation_deficit, validate_params)

from conftest import STUDY


def test_study_params_valid():
    d = validate_params(STUDY)
    assert d.gamma == pytest.approx(-0.44, abs=1e-15)
    assert d.kappa == pytest.approx(-0.8, abs=1e-15)
    assert STUDY.rho2 == pytest.approx(0.2)


def test_heat_equation_params():
    d = validate_params(Params(1.0, 1.0))
    assert d.kappa == 0.0 and d.gamma == 0.0


def test_inadmissible_reaction_names_inequality():
    with pytest.raises(ParameterError) as err:
        validate_params(Params(1.0, 1.0, 0.0, 20.0))
    assert "Gamma" in err.value.inequality


@pytest.mark.parametrize("bad", [Params(0.0, 1.0), Params(1.0, -1.0), Params(float("nan"), 1.0)])
def test_positivity_and_finiteness(bad):
    with pytest.raises(ParameterError):
        validate_params(bad)


def test_eigenvalues_positive_increasing():
    d = validate_params(Params(1.0, 0.7, 3.0, 5.0))
    lam = d.eigenvalue(np.arange(1, 200))
    assert np.all(lam > 0) and np.all(np.diff(lam) > 0)


def test_grid_nodes():
    g = GridSpec(N=7, M=9, T=2.5, b=0.1)
    assert g.times[0] == 0.0 and g.times[-1] == 2.5
    assert g.locations[0] == 0.1 and g.locations[-1] == 0.9
    assert np.all(np.diff(g.locations) > 0)
    assert g.ratio == pytest.approx(g.dx / math.sqrt(g.dt))
    assert g.n_points == 8 * 10


@pytest.mark.parametrize("kw", [dict(N=0, M=3), dict(N=3, M=0), dict(N=3, M=3, T=0.0), dict(N=3, M=3, b=0.5)])
def test_degenerate_grid(kw):
    with pytest.raises(ValueError, match="degenerate"):
        GridSpec(**kw)


def test_eigenfunction_values():
    d = validate_params(STUDY)
    assert eigenfunction_eval(3, 0.0, d) == 0.0
    assert eigenfunction_eval(3, 1.0, d) == 0.0
    assert eigenfunction_eval(1, 0.5, validate_params(Params(1.0, 1.0))) == pytest.approx(math.sqrt(2))
    assert eigenfunction_eval(2, 0.5, d) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        eigenfunction_eval(0, 0.5, d)


def test_cosine_series_known_values():
    assert cosine_series_closed(0.0, 0.0) == pytest.approx(math.pi**2 / 6, rel=1e-15)
    assert cosine_series_closed(0.0, 1.0) == pytest.approx(-math.pi**2 / 12, rel=1e-15)
    assert cosine_series_closed(1.0, 0.0) == pytest.approx(math.pi / (2 * math.tanh(math.pi)) - 0.5, rel=1e-14)
    # 10^6-term direct sums (frozen)
    assert cosine_series_closed(1.0, 0.0) == pytest.approx(1.0766740474685812, abs=1.1e-6)
    with pytest.raises(ValueError):
        cosine_series_closed(-1.0, 0.3)


@pytest.mark.parametrize("beta", [-0.9, -0.3, 0.0, 0.5, 5.0])
def test_cosine_series_vs_direct(beta):
    ell = np.arange(1, 200_001, dtype=float)
    x = np.linspace(0.05, 1.0, 8)
    direct = (np.cos(np.pi * np.outer(x, ell)) / (ell**2 + beta)).sum(axis=1)
    # away from x = 0 the tail of the cosine series is O(1/L^2)
    assert np.max(np.abs(cosine_series_closed(beta, x) - direct)) < 1e-8


def test_closed_covariance_examples():
    heat = Params(1.0, 0.5)  # sigma2 = 2 theta2
    assert spatial_covariance_closed(0.3, 0.7, heat) == pytest.approx(0.09, rel=1e-14)
    assert spatial_covariance_closed(0.0, 0.7, STUDY) == 0.0
    assert field_covariance(0.4, 0.3, 0.4, 0.3, heat) == pytest.approx(0.21, abs=1e-10)
    assert field_covariance(0.4, 0.0, 0.9, 0.3, STUDY) == 0.0


@pytest.mark.parametrize("p", [STUDY, Params(1.0, 1.0, 2.0, -5.0), Params(1.0, 1.0, 0.0, 3.0)])
def test_closed_matches_series(p):
    x = np.linspace(0, 1, 21)
    X, Y = np.meshgrid(x, x, indexing="ij")
    series = field_covariance(0.3, X, 0.3, Y, p, tol=1e-10)
    assert np.max(np.abs(series - spatial_covariance_closed(X, Y, p))) < 1e-8
    assert field_covariance(0.0, 0.25, 0.0, 0.5, p) == pytest.approx(
        spatial_covariance_closed(0.25, 0.5, p), abs=1e-8)


def test_series_vs_brute_force():
    # frozen from a 200,000-term direct summation
    d = validate_params(STUDY)
    ell = np.arange(1, 200_001, dtype=float)
    lam = d.eigenvalue(ell)
    e = lambda y: math.sqrt(2) * np.sin(math.pi * ell * y) * math.exp(-d.kappa * y / 2)
    for lag in (0.0, 0.01):
        brute = STUDY.sigma2 * np.sum(np.exp(-lam * lag) / (2 * lam) * e(0.3) * e(0.6))
        assert field_covariance(0.0, 0.3, lag, 0.6, STUDY, tol=1e-13) == pytest.approx(brute, abs=1e-11)


def test_gamma_branch_limits():
    for g in (1e-6, -1e-6):
        p = Params(1.0, 1.0, 0.0, -g)
        assert abs(p.gamma - g) < 1e-18
        z = spatial_covariance_closed(0.2, 0.7, Params(1.0, 1.0))
        assert spatial_covariance_closed(0.2, 0.7, p) == pytest.approx(z, abs=1e-6)
        d0 = ito_coefficients(0.4, 1.0, Params(1.0, 1.0))[0]
        assert ito_coefficients(0.4, 1.0, p)[0] == pytest.approx(d0, abs=1e-6)


def test_ito_coefficients():
    drift, diff = ito_coefficients(0.5, 1.0, Params(0.3, 0.5))
    assert drift == pytest.approx(-2.0) and diff == pytest.approx(math.sqrt(0.3))
    assert ito_coefficients(0.3, 0.0, STUDY)[0] == 0.0
    g0 = 0.5
    drift, _ = ito_coefficients(0.5, 1.0, Params(1.0, 1.0, 0.0, -0.25))
    assert drift == pytest.approx(-g0 * math.cosh(g0 / 2) / math.sinh(g0 / 2), rel=1e-13)
    with pytest.raises(ValueError):
        ito_coefficients(1.0, 1.0, STUDY)


def test_covariance_blocks_match_pointwise():
    y = np.array([0.0, 0.2, 0.55, 0.9])
    B = covariance_blocks([0.0, 0.003, 0.1], y, y, STUDY)
    for j, lag in enumerate([0.0, 0.003, 0.1]):
        ref = field_covariance(0.0, y[:, None], lag, y[None, :], STUDY, tol=1e-12)
        assert np.max(np.abs(B[j] - ref)) < 1e-11


def test_truncation_deficit_positive_and_decreasing():
    y = np.array([0.3, 0.5])
    d1 = truncation_deficit(y, 100, STUDY)
    d2 = truncation_deficit(y, 1000, STUDY)
    assert np.all(d1 > d2) and np.all(d2 > 0)
    # about sigma2 e^{-kappa y} / (2 theta2 pi^2 K) for large K
    approx = STUDY.sigma2 * np.exp(0.8 * y) / (2 * 0.5 * math.pi**2 * 1000)
    assert np.allclose(d2, approx, rtol=0.01)


locs = st.floats(0.0, 1.0)
times = st.floats(0.0, 2.0)


@given(s=times, t=times, x=locs, y=locs)
def test_covariance_symmetric(s, t, x, y):
    a = field_covariance(s, x, t, y, STUDY, tol=1e-11)
    b = field_covariance(t, y, s, x, STUDY, tol=1e-11)
    assert a == pytest.approx(b, abs=1e-12)


@given(x=st.floats(0.01, 0.99), lag1=st.floats(0.0, 0.5), extra=st.floats(1e-3, 0.5))
def test_covariance_nonincreasing_in_lag(x, lag1, extra):
    a = field_covariance(0.0, x, lag1, x, STUDY, tol=1e-12)
    b = field_covariance(0.0, x, lag1 + extra, x, STUDY, tol=1e-12)
    assert b <= a + 1e-12


@given(x=locs, y=locs, t1=st.floats(-3.0, 3.0), t0=st.floats(-5.0, 5.0))
def test_closed_equals_series_property(x, y, t1, t0):
    p = Params(0.5, 1.0, t1, t0)
    assert abs(spatial_covariance_closed(x, y, p) - field_covariance(1.0, x, 1.0, y, p, tol=1e-10)) < 1e-8


def test_spatial_covariance_psd(study):
    y = np.linspace(0.05, 0.95, 30)
    C = spatial_covariance_closed(y[:, None], y[None, :], study)
    assert np.linalg.eigvalsh(C).min() > 0
