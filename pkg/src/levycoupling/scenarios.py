"""Built-in scenario catalog.

Each entry pairs a drift/noise/initial-condition scenario with simulation
defaults (coupling threshold, jump truncation, step size) and the
certificate kinds that apply to it.  The catalog is the test bed for the
certificate cross-checks and the CLI's named scenarios.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import ScenarioSpec, catalog_drift, catalog_noise

__all__ = ["CatalogEntry", "catalog_names", "catalog_entry"]


@dataclass(frozen=True)
class CatalogEntry:
    scenario: ScenarioSpec
    kappa: float
    eps: float
    h: float
    t_max: float
    record_every: int
    cert_kinds: tuple
    sigma_alpha: float = 0.5
    sigma_theta: float = 1.0
    small_jump_mode: str = "drop"


def _linear_1d():
    drift = catalog_drift("linear_dissipative", K2=1.0)
    noise = catalog_noise("truncated_isotropic_stable", d=1, alpha=1.5, R=1.0)
    sc = ScenarioSpec("linear_1d", drift, noise, np.array([1.0]),
                      np.array([0.0]))
    # l0 = 0: synchronous coupling (kappa = 0), exact certificate
    return CatalogEntry(sc, kappa=0.0, eps=1e-3, h=1e-3, t_max=5.0,
                        record_every=10, cert_kinds=("w1",))


def _linear_2d():
    drift = catalog_drift("linear_dissipative", d=2, K2=1.0)
    noise = catalog_noise("isotropic_stable", d=2, alpha=1.2)
    sc = ScenarioSpec("linear_2d", drift, noise, np.array([1.0, 1.0]),
                      np.array([0.0, 0.0]))
    return CatalogEntry(sc, kappa=0.0, eps=0.05, h=0.002, t_max=5.0,
                        record_every=25, cert_kinds=("w1",))


def _piecewise_1d():
    drift = catalog_drift("piecewise", K1=0.5, K2=1.0, l0=1.0)
    noise = catalog_noise("isotropic_stable", d=1, alpha=1.2)
    sc = ScenarioSpec("piecewise_1d", drift, noise, np.array([2.0]),
                      np.array([-0.5]))
    return CatalogEntry(sc, kappa=1.0, eps=0.1, h=0.0025, t_max=5.0,
                        record_every=20, cert_kinds=("w1", "tv"),
                        sigma_alpha=0.9)


def _superlinear_1d():
    drift = catalog_drift("gradient_superlinear", theta=1.0, l0=1.0)
    noise = catalog_noise("isotropic_stable", d=1, alpha=1.5)
    sc = ScenarioSpec("superlinear_1d", drift, noise, np.array([1.0]),
                      np.array([-1.0]))
    return CatalogEntry(sc, kappa=1.0, eps=0.1, h=0.002, t_max=5.0,
                        record_every=25, cert_kinds=("tv", "strong"),
                        sigma_alpha=0.9)


def _lattice_cp():
    drift = catalog_drift("zero")
    noise = catalog_noise("compound_poisson", d=1,
                          atoms=[(-2.0, 1.0), (-1.0, 2.0),
                                 (1.0, 2.0), (2.0, 1.0)])
    sc = ScenarioSpec("lattice_cp", drift, noise, np.array([1.0]),
                      np.array([0.0]))
    # pure oracle instance: zero drift carries no contraction certificate
    return CatalogEntry(sc, kappa=1.0, eps=0.5, h=0.0125, t_max=5.0,
                        record_every=40, cert_kinds=())


def _halfspace_1d():
    drift = catalog_drift("piecewise", K1=0.25, K2=1.0, l0=0.5)
    noise = catalog_noise("half_space_stable", d=1, alpha=0.5)
    sc = ScenarioSpec("halfspace_1d", drift, noise, np.array([1.0]),
                      np.array([0.0]))
    return CatalogEntry(sc, kappa=0.5, eps=0.05, h=0.0125, t_max=5.0,
                        record_every=25, cert_kinds=("w1", "tv"),
                        sigma_alpha=0.4)


_CATALOG = {
    "linear_1d": _linear_1d,
    "linear_2d": _linear_2d,
    "piecewise_1d": _piecewise_1d,
    "superlinear_1d": _superlinear_1d,
    "lattice_cp": _lattice_cp,
    "halfspace_1d": _halfspace_1d,
}


def catalog_names():
    return list(_CATALOG)


def catalog_entry(name: str) -> CatalogEntry:
    if name not in _CATALOG:
        raise KeyError(f"unknown catalog scenario {name!r}; "
                       f"choose from {sorted(_CATALOG)}")
    return _CATALOG[name]()
