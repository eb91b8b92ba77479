import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from levycoupling.estimators import (ctmc_oracle, default_fit_window,
                                     empirical_w1, fit_exponential_rate,
                                     tv_curve_from_coupling, w1_lp_oracle,
                                     w1_curve_from_coupling)
from levycoupling.scenarios import catalog_entry


def test_w1_1d_matches_lp_oracle(rng):
    for _ in range(10):
        na, nb = rng.integers(3, 30), rng.integers(3, 30)
        xa = rng.normal(size=(na, 1))
        xb = rng.normal(size=(nb, 1))
        wa = rng.uniform(0.1, 1.0, na)
        wb = rng.uniform(0.1, 1.0, nb)
        got = empirical_w1(xa, xb, wa, wb)
        want = w1_lp_oracle(xa, wa, xb, wb)
        assert abs(got - want) <= 1e-8 * max(1.0, want)


def test_w1_2d_assignment_matches_lp_oracle(rng):
    n = 40
    xa = rng.normal(size=(n, 2))
    xb = rng.normal(size=(n, 2)) + 0.5
    got = empirical_w1(xa, xb)
    want = w1_lp_oracle(xa, np.full(n, 1.0 / n), xb, np.full(n, 1.0 / n))
    assert abs(got - want) <= 1e-8 * max(1.0, want)


def test_w1_2d_large_uses_flagged_sinkhorn(rng):
    n = 700
    xa = rng.normal(size=(n, 2))
    xb = rng.normal(size=(n, 2)) + 1.0
    got, info = empirical_w1(xa, xb, return_info=True)
    assert info["method"] == "sinkhorn" and info["approximate"]
    sub = 300
    exact = empirical_w1(xa[:sub], xb[:sub])
    assert abs(got - exact) <= 0.3 * max(exact, 1.0)


def test_w1_translation_identity(rng):
    x = rng.normal(size=(100, 1))
    assert abs(empirical_w1(x, x + 2.0) - 2.0) <= 1e-10


def test_w1_curve_from_coupling():
    times = np.array([0.0, 1.0, 2.0])
    d = np.array([[2.0, 1.0, 0.0], [4.0, 3.0, 2.0]])
    c = w1_curve_from_coupling(times, d)
    assert c.kind == "w1"
    assert np.allclose(c.values, [3.0, 2.0, 1.0])
    assert np.all(c.stderr >= 0)


def test_tv_curve_survival_and_wilson():
    tc = np.array([0.5, 1.5, np.inf, np.inf])
    grid = np.array([0.0, 1.0, 2.0])
    c = tv_curve_from_coupling(tc, grid, t_max=2.0)
    assert c.kind == "tv"
    assert np.allclose(c.values, [2.0, 2.0 * 0.75, 2.0 * 0.5])
    assert np.all(np.diff(c.values) <= 0)
    lo, hi = c.ci_lo, c.ci_hi
    assert np.all(lo <= c.values + 1e-12) and np.all(c.values <= hi + 1e-12)


def test_fit_recovers_synthetic_rate(rng):
    t = np.linspace(0.0, 5.0, 40)
    lam_true = 0.8
    tc = rng.exponential(1.0 / lam_true, size=5000)
    c = tv_curve_from_coupling(tc, t, t_max=5.0)
    fit = fit_exponential_rate(c, paths=tc, rng=rng)
    assert abs(fit.lambda_hat - lam_true) < 0.1
    assert fit.ci[0] <= fit.lambda_hat <= fit.ci[1]
    assert fit.ci[0] <= lam_true <= fit.ci[1]


def test_default_fit_window_drops_head_and_noise_floor():
    t = np.linspace(0.0, 5.0, 51)
    v = 2.0 * np.exp(-1.0 * t)
    se = np.full_like(t, 1e-3)
    from levycoupling.estimators import DistanceCurve
    c = DistanceCurve(kind="tv", times=t, values=v, stderr=se,
                      ci_lo=v, ci_hi=v, n_paths=1000)
    lo, hi = default_fit_window(c)
    assert lo > 0.0 and hi < t[-1] + 1e-12
    assert v[t >= lo][0] <= 0.5 * v[0] + 1e-9


def test_ctmc_oracle_against_matrix_exponential():
    entry = catalog_entry("lattice_cp")
    tg = np.linspace(0.0, 3.0, 7)
    res = ctmc_oracle(entry.scenario, kappa=1.0, t_grid=tg)
    assert res.truncation_error <= 1e-6
    assert np.all(np.diff(res.survival) <= 1e-12)
    # independent check: generator matrix exponential on a large truncation
    m = res.level_rate
    M = 400
    Q = np.zeros((M + 1, M + 1))
    for k in range(1, M):
        Q[k, k - 1] += 0.5 * m
        Q[k, k + 1] += 0.5 * m
        Q[k, k] -= m
    Q[M, M] = 0.0
    p0 = np.zeros(M + 1)
    p0[1] = 1.0
    for t, s in zip(tg, res.survival):
        p = p0 @ expm(Q * t)
        assert abs((1.0 - p[0]) - s) <= 1e-6


@settings(max_examples=20, deadline=None)
@given(shift=st.floats(-3.0, 3.0), n=st.integers(5, 60))
def test_w1_shift_property(shift, n):
    rng = np.random.default_rng(abs(hash((shift, n))) % 2 ** 32)
    x = rng.normal(size=(n, 1))
    got = empirical_w1(x, x + shift)
    assert abs(got - abs(shift)) <= 1e-9
