import numpy as np
import pytest

from levycoupling.models import (DriftModel, ScenarioSpec, catalog_drift,
                                 catalog_noise, sampler_density_chisq,
                                 verify_drift_condition)


def pair_sampler(rng, scale=4.0, d=1):
    def draw():
        return rng.normal(scale=scale, size=d), \
            rng.normal(scale=scale, size=d)
    return draw


def test_linear_drift_condition(rng):
    drift = catalog_drift("linear_dissipative", K2=1.5)
    assert drift.l0 == 0.0 and drift.K2 == 1.5
    assert verify_drift_condition(drift, pair_sampler(rng), n=2000) == []


def test_piecewise_drift_condition(rng):
    drift = catalog_drift("piecewise", K1=0.5, K2=1.0, l0=1.0)
    assert drift.K2 == 1.0 - 2.0 * 1.5 / 27.0
    assert verify_drift_condition(drift, pair_sampler(rng), n=4000) == []
    # short-range expansion stays below K1 r
    for r in (0.01, 0.3, 0.9):
        x, y = np.array([r / 2]), np.array([-r / 2])
        num = float(((drift.b(x) - drift.b(y)) * (x - y))[0])
        assert num <= drift.phi1(r) * r + 1e-12


def test_superlinear_drift_condition(rng):
    drift = catalog_drift("gradient_superlinear", theta=1.0, l0=1.0)
    assert drift.K2 == pytest.approx(3.0 / 2.0)
    assert verify_drift_condition(drift, pair_sampler(rng, scale=2.0),
                                  n=4000) == []
    # antipodal pair attains the declared superlinear tail rate
    r = 4.0
    x, y = np.array([r / 2]), np.array([-r / 2])
    num = float(((drift.b(x) - drift.b(y)) * (x - y))[0])
    assert num <= -drift.phi2(r) * r + 1e-9


def test_zero_drift():
    drift = catalog_drift("zero")
    assert np.all(drift.b(np.array([3.0, -1.0])) == 0.0)


def test_unknown_kinds_rejected():
    with pytest.raises(ValueError):
        catalog_drift("nope")
    with pytest.raises(ValueError):
        catalog_noise("nope")
    with pytest.raises(ValueError):
        catalog_drift("linear_dissipative", K2=-1.0)


def test_scenario_dimension_check():
    drift = catalog_drift("linear_dissipative")
    noise = catalog_noise("isotropic_stable", d=2, alpha=1.2)
    with pytest.raises(ValueError):
        ScenarioSpec("bad", drift, noise, np.array([1.0]), np.array([0.0]))
    sc = ScenarioSpec("ok", drift, noise, np.array([1.0, 0.0]),
                      np.zeros(2))
    assert sc.dim == 2


def test_sampler_matches_density(rng):
    m = catalog_noise("truncated_isotropic_stable", d=1, alpha=1.5, R=1.0)
    assert sampler_density_chisq(m, 0.05, 20000, rng) > 0.001


def test_sampler_matches_density_halfspace(rng):
    m = catalog_noise("half_space_stable", d=2, alpha=1.2)
    assert sampler_density_chisq(m, 0.1, 20000, rng) > 0.001


def test_sampler_matches_density_atoms(rng):
    m = catalog_noise("compound_poisson",
                      atoms=[(-1.0, 2.0), (1.0, 2.0), (2.0, 1.0)])
    assert sampler_density_chisq(m, 0.5, 20000, rng) > 0.001
