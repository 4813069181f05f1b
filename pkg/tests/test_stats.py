import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from spdeqv.model import GridSpec, Params
from spdeqv.series import phi_norm, psi
from spdeqv.simulate import ExactSampler, Field, SimConfig, simulate_spectral
from spdeqv.stats import (clt_diagnostic, coarse_double_increments, double_increment_lag_covariances,
                          double_qv_moments, increment_covariance_exact, increment_covariance_matrix,
                          increments, realized_qv)

from conftest import STUDY


def _field(values, b=0.0, T=1.0):
    values = np.asarray(values, float)
    g = GridSpec(values.shape[0] - 1, values.shape[1] - 1, T=T, b=b)
    return Field(values, g)


def test_increment_shapes_and_constant_field():
    f = _field(np.full((5, 4), 2.5))
    assert increments(f, "time").values.shape == (4, 4)
    assert increments(f, "space").values.shape == (5, 3)
    assert increments(f, "double").values.shape == (4, 3)
    for kind in ("time", "space", "double"):
        assert np.all(increments(f, kind).values == 0.0)
    with pytest.raises(ValueError):
        increments(f, "diagonal")


def test_linear_in_space_field():
    g = GridSpec(3, 4)
    f = Field(np.tile(3.0 * g.locations, (4, 1)), g)
    assert np.all(increments(f, "time").values == 0)
    assert np.all(increments(f, "double").values == 0)
    assert np.allclose(increments(f, "space").values, 3.0 * g.dx)


@given(arrays(float, (5, 6), elements=st.floats(-1e3, 1e3)))
def test_double_increment_commutes(X):
    f = _field(X)
    time_then_space = np.diff(np.diff(X, axis=0), axis=1)
    space_then_time = np.diff(np.diff(X, axis=1), axis=0)
    assert np.array_equal(increments(f, "double").values, space_then_time)
    assert np.allclose(time_then_space, space_then_time, rtol=0, atol=1e-9)


def test_coarse_increments_reduce_to_plain():
    X = np.random.default_rng(0).normal(size=(9, 7))
    assert np.array_equal(coarse_double_increments(X, 1, 1), increments(_field(X), "double").values)
    D = coarse_double_increments(X, 2, 3)
    assert D.shape == (7, 4)
    assert D[1, 2] == pytest.approx(X[3, 5] - X[3, 2] - X[1, 5] + X[1, 2])


def test_realized_qv_hand_example():
    X = np.array([[0.0, 1.0, 0.0], [0.0, 3.0, 0.0]])
    f = _field(X, T=1.0)
    g = f.grid
    k = 0.4
    y = g.locations
    vt = realized_qv(f, "Vt", k)
    assert vt.value == pytest.approx((0 + math.exp(k * y[1]) * 4) / (2 * 1 * 1.0))
    vsp = realized_qv(f, "Vsp", k)
    assert vsp.value == pytest.approx((math.exp(k * y[0]) * 1 + math.exp(k * y[1]) * 1) / (1 * 2 * 0.5))
    vr = realized_qv(f, "Vr", k)
    D = np.array([2.0, -2.0])
    mid = 0.5 * (y[:-1] + y[1:])
    assert vr.value == pytest.approx(np.sum(np.exp(k * mid) * D**2) / 2)
    p = Params(1.0, 0.5, k * 0.5)
    vd = realized_qv(f, "Vdouble", k, p)
    assert vd.normalization == pytest.approx(2 * phi_norm(g.dx, g.dt, p))
    with pytest.raises(ValueError):
        realized_qv(f, "Vdouble", k)


@given(c=st.floats(-5.0, 5.0))
def test_qv_scales_quadratically(c):
    X = np.random.default_rng(1).normal(size=(6, 5))
    f = _field(X, b=0.1)
    for kind in ("Vt", "Vsp", "Vdouble", "Vr"):
        base = realized_qv(f, kind, -0.8, STUDY).value
        assert realized_qv(f.scaled(c), kind, -0.8, STUDY).value == pytest.approx(c * c * base, rel=1e-12, abs=1e-300)


def test_zero_field_statistics():
    f = _field(np.zeros((4, 4)), b=0.1)
    for kind in ("Vt", "Vsp", "Vdouble", "Vr"):
        assert realized_qv(f, kind, 0.3, STUDY).value == 0.0


def test_increment_covariance_stationary_and_matrix():
    g = GridSpec(4, 4, b=0.1)
    for kind in ("time", "space", "double"):
        a = increment_covariance_exact(g, STUDY, kind, (0, 1), (2, 2))
        b = increment_covariance_exact(g, STUDY, kind, (1, 1), (3, 2))
        assert a == pytest.approx(b, abs=1e-14)
    C = increment_covariance_matrix(g, STUDY, "double")
    assert C[1 * 4 + 2, 2 * 4 + 3] == pytest.approx(increment_covariance_exact(g, STUDY, "double", (1, 2), (2, 3)), abs=1e-13)
    with pytest.raises(IndexError):
        increment_covariance_exact(g, STUDY, "double", (4, 0), (0, 0))


def test_double_increment_variance_matches_phi():
    g = GridSpec(400, 20, b=0.1)
    k = 7
    v = increment_covariance_exact(g, STUDY, "double", (0, k), (0, k))
    target = STUDY.sigma2 * math.exp(-STUDY.kappa * g.locations[k]) * phi_norm(g.dx, g.dt, STUDY)
    # remainder of order dx sqrt(dt) min(dx, sqrt(dt))
    assert abs(v - target) < 5 * g.dx * math.sqrt(g.dt) * min(g.dx, math.sqrt(g.dt))


def test_lag_covariances_match_matrix():
    g = GridSpec(5, 4, b=0.1)
    R = double_increment_lag_covariances(g, STUDY)
    C = increment_covariance_matrix(g, STUDY, "double").reshape(5, 4, 5, 4)
    for J in range(5):
        assert np.allclose(R[J], C[0, :, J, :], atol=1e-13)


def test_double_qv_moments_match_dense_isserlis():
    g = GridSpec(6, 5, b=0.1)
    m = double_qv_moments(g, STUDY)
    C = increment_covariance_matrix(g, STUDY, "double")
    w = np.tile(np.exp(0.5 * STUDY.kappa * g.locations[:5]), 6)
    Ct = C * np.outer(w, w)
    norm = g.M * g.N * m.phi
    assert m.mean == pytest.approx(np.trace(Ct) / norm, rel=1e-12)
    assert m.variance == pytest.approx(2 * np.sum(Ct * Ct) / norm**2, rel=1e-10)


def test_qv_moment_formula_against_monte_carlo():
    g = GridSpec(8, 6, b=0.1)
    m = double_qv_moments(g, STUDY)
    X = ExactSampler(STUDY, g).draw_many(20000, seed=3)
    vals = np.array([realized_qv(Field(x, g), "Vdouble", STUDY.kappa, STUDY).value for x in X])
    assert abs(vals.mean() - m.mean) < 3.5 * math.sqrt(m.variance / vals.size)
    se_var = m.variance * math.sqrt(2 / (vals.size - 1)) * 1.2
    assert abs(vals.var(ddof=1) - m.variance) < 3.5 * se_var


def test_increment_covariance_vs_spectral_mc():
    g = GridSpec(3, 3, b=0.1)
    reps = 50000
    X = ExactSampler(STUDY, g).draw_many(reps, seed=21)
    D = np.diff(np.diff(X, axis=1), axis=2).reshape(reps, -1)
    emp = np.cov(D, rowvar=False)
    C = increment_covariance_matrix(g, STUDY, "double")
    sd = np.sqrt(np.outer(np.diag(C), np.diag(C)) + C**2) / math.sqrt(reps)
    assert np.max(np.abs(emp - C) / sd) < 5
    # a spectral cross-check on a single entry
    spec = np.array([simulate_spectral(STUDY, g, SimConfig(K=2000, seed=s)).values for s in range(4000)])
    Ds = np.diff(np.diff(spec, axis=1), axis=2)[:, 1, 1]
    assert abs(Ds.var(ddof=1) - C[4, 4]) < 4 * C[4, 4] * math.sqrt(2 / 3999)


def test_vr_tracks_vdouble_on_balanced_grids():
    errs = []
    for M in (8, 16, 32):
        g = GridSpec(M * M, M, b=0.1)
        R = double_increment_lag_covariances(g, STUDY)[0]
        ED = np.diag(R)
        y = g.locations
        vr = np.sum(np.exp(STUDY.kappa * 0.5 * (y[:-1] + y[1:])) * ED) / (M * math.sqrt(g.dt))
        vd = np.sum(np.exp(STUDY.kappa * y[:-1]) * ED) / (M * phi_norm(g.dx, g.dt, STUDY))
        errs.append(abs(vr / (psi(g.ratio, STUDY.theta2) * math.exp(-STUDY.kappa * g.dx / 2)) - vd))
    assert errs[2] < errs[1] < errs[0]


def test_clt_diagnostic_examples(rng):
    d = clt_diagnostic(np.eye(7))
    assert d.ratio == pytest.approx(1 / 14) and d.variance == 14.0
    for n in (3, 10, 50):
        assert clt_diagnostic(np.ones((n, n))).ratio == pytest.approx(0.5)
    A = rng.normal(size=(5, 5))
    S = A @ A.T
    # Isserlis: Var(sum Z_i^2) = sum_ij Cov(Z_i^2, Z_j^2) = sum_ij 2 S_ij^2
    Z = rng.multivariate_normal(np.zeros(5), S, size=200_000)
    q = (Z**2).sum(axis=1)
    assert clt_diagnostic(S).variance == pytest.approx(q.var(), rel=0.03)
    assert clt_diagnostic(S).variance == pytest.approx(2 * np.sum(S * S), rel=1e-14)
    with pytest.raises(ValueError):
        clt_diagnostic(np.array([[1.0, 2.0], [0.0, 1.0]]))
