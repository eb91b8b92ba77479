"""Catalog of drift fields and noise laws used by the experiments.

A drift ships together with its declared dissipativity profile
``(phi1, phi2, l0)``: the radial expansion bound below ``l0`` and the
contraction bound beyond it.  Declared profiles are data, not derived; the
sampled checker :func:`verify_drift_condition` probes them but certification
soundness remains conditional on the declaration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .measures import LevyModel

__all__ = [
    "DriftModel",
    "ScenarioSpec",
    "catalog_drift",
    "catalog_noise",
    "verify_drift_condition",
    "sampler_density_chisq",
]


@dataclass(frozen=True)
class DriftModel:
    kind: str
    b: Callable[[np.ndarray], np.ndarray]
    phi1: Callable[[float], float]
    phi2: Callable[[float], float]
    l0: float
    K1: float = 0.0
    K2: float = 0.0
    theta: float = 0.0
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    drift: DriftModel
    noise: LevyModel
    x0: np.ndarray
    y0: np.ndarray

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        y0 = np.asarray(self.y0, dtype=float).reshape(-1)
        if len(x0) != len(y0) or len(x0) != self.noise.dim:
            raise ValueError("scenario dimensions disagree")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "y0", y0)

    @property
    def dim(self) -> int:
        return self.noise.dim


def catalog_drift(kind: str, *, d: int = 1, K1: float = 0.0, K2: float = 1.0,
                  l0: float = 1.0, theta: float = 1.0) -> DriftModel:
    """Build a catalog drift with its declared profile.

    Kinds:

    * ``zero``                  b = 0 (baseline for coupling diagnostics).
    * ``linear_dissipative``    b(x) = -K2 x, uniformly dissipative (l0 = 0).
    * ``piecewise``             expanding slope K1 near the origin, -K2 x
                                outside, blended by a C^1 radial bump.
    * ``gradient_superlinear``  b = grad(-|x|^(2+theta)).
    """
    if kind == "zero":
        return DriftModel(kind=kind, b=lambda x: np.zeros_like(x),
                          phi1=lambda r: 0.0, phi2=lambda r: 0.0, l0=0.0)
    if K2 <= 0:
        raise ValueError("K2 must be positive")
    if kind == "linear_dissipative":
        return DriftModel(
            kind=kind,
            b=lambda x: -K2 * x,
            phi1=lambda r: 0.0,
            phi2=lambda r: K2 * r,
            l0=0.0,
            K2=K2,
        )
    if kind == "piecewise":
        # b(x) = -K2 x + (K1+K2) x (1 - |x|/a)_+^2 with a = l0/2.  The bump is
        # C^1, has slope K1+K2 at the origin (so the one-sided Lipschitz bound
        # K1 holds everywhere) and magnitude at most (K1+K2) 4a/27.  Pairs at
        # distance >= l0 can contain at most one point of the bump support, so
        # the declared tail rate is K2 - 2(K1+K2)/27.
        a = l0 / 2.0
        K2_eff = K2 - 2.0 * (K1 + K2) / 27.0
        if K2_eff <= 0:
            raise ValueError("piecewise drift needs K2 > 2(K1+K2)/27")

        def b(x):
            r = np.linalg.norm(x)
            bump = (1.0 - r / a) ** 2 if r < a else 0.0
            return -K2 * x + (K1 + K2) * bump * x

        return DriftModel(kind=kind, b=b,
                          phi1=lambda r: K1 * r,
                          phi2=lambda r: K2_eff * r,
                          l0=l0, K1=K1, K2=K2_eff,
                          params={"K2_raw": K2})
    if kind == "gradient_superlinear":
        # b = grad(-|x|^(2+theta)) = -(2+theta)|x|^theta x; in the radial
        # (antipodal) worst case <b(x)-b(y), x-y> = -(2+theta) 2^{-theta}
        # |x-y|^{2+theta}, which the declared tail constant matches.
        coef = 2.0 + theta
        K2_eff = coef * 2.0 ** -theta

        def b(x):
            r = np.linalg.norm(x)
            return -coef * r ** theta * x

        return DriftModel(kind=kind, b=b,
                          phi1=lambda r: 0.0,
                          phi2=lambda r: K2_eff * r ** (1.0 + theta),
                          l0=l0, K1=0.0, K2=K2_eff, theta=theta)
    raise ValueError(f"unknown drift kind {kind!r}")


def catalog_noise(kind: str, *, d: int = 1, alpha: float = 1.0,
                  intensity: float = 1.0, R: float = 1.0,
                  atoms=None) -> LevyModel:
    """Build a catalog noise law (see :class:`LevyModel` for the families)."""
    if kind == "isotropic_stable":
        return LevyModel(kind=kind, dim=d, alpha=alpha, intensity=intensity)
    if kind == "truncated_isotropic_stable":
        if R <= 0:
            raise ValueError("truncation radius must be positive")
        return LevyModel(kind=kind, dim=d, alpha=alpha, intensity=intensity,
                         trunc_radius=R)
    if kind == "half_space_stable":
        return LevyModel(kind=kind, dim=d, alpha=alpha, intensity=intensity)
    if kind == "compound_poisson":
        if not atoms:
            raise ValueError("compound_poisson needs atoms [(z, rate), ...]")
        zs = np.atleast_2d(np.asarray([a for a, _ in atoms], dtype=float))
        if zs.shape[1] != d:
            zs = zs.reshape(-1, d)
        ws = np.asarray([w for _, w in atoms], dtype=float)
        return LevyModel(kind=kind, dim=d, atoms=zs, weights=ws)
    raise ValueError(f"unknown noise kind {kind!r}")


def verify_drift_condition(drift: DriftModel, pair_sampler, n: int,
                           slack: float = 1e-9) -> list[tuple]:
    """Check the declared dissipativity profile on n sampled pairs.

    The inequality tested is
    ``<b(x)-b(y), x-y>/|x-y| <= phi1(r) - [phi1(r)+phi2(r)] 1_{r >= l0}``
    with r = |x-y|.  Returns the list of violations (x, y, lhs, rhs); an
    empty list means "passed at sampled resolution", not a proof.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    violations = []
    for _ in range(n):
        x, y = pair_sampler()
        u = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        r = float(np.linalg.norm(u))
        if r == 0.0:
            continue
        lhs = float(np.dot(drift.b(np.asarray(x, float)) - drift.b(np.asarray(y, float)), u)) / r
        rhs = drift.phi1(r)
        if r >= drift.l0:
            rhs -= drift.phi1(r) + drift.phi2(r)
        if lhs > rhs + slack * (1.0 + abs(rhs)):
            violations.append((np.asarray(x, float), np.asarray(y, float), lhs, rhs))
    return violations


def sampler_density_chisq(model: LevyModel, eps: float, n: int,
                          rng: np.random.Generator, n_bins: int = 40) -> float:
    """Chi-square goodness-of-fit p-value of n sampled large jumps against
    the normalized density above eps.

    Bins are radial quantile shells, split by sign of z_1 so that asymmetric
    supports are exercised.  Atomic models are binned per atom.
    """
    from scipy import stats

    z = model.sample_jumps(rng, n, eps)
    if model.kind == "compound_poisson":
        keep = np.linalg.norm(model.atoms, axis=1) > eps
        atoms, w = model.atoms[keep], model.weights[keep]
        counts = np.array([
            (np.linalg.norm(z - a, axis=1) <= 1e-9).sum() for a in atoms
        ], dtype=float)
        expected = n * w / w.sum()
        stat = ((counts - expected) ** 2 / expected).sum()
        return float(stats.chi2.sf(stat, df=len(atoms) - 1))
    # radial quantile edges from the exact radial CDF
    total = model.rate_above(eps)
    qs = np.linspace(0.0, 1.0, n_bins + 1)[1:-1]
    edges = [eps]
    for q in qs:
        lo, hi = eps, eps * 1e9
        for _ in range(200):     # bisection on the survival rate
            mid = math.sqrt(lo * hi)
            if 1.0 - model.rate_above(mid) / total < q:
                lo = mid
            else:
                hi = mid
        edges.append(math.sqrt(lo * hi))
    edges.append(math.inf)
    r = np.linalg.norm(z, axis=1)
    sgn = z[:, 0] > 0
    counts, expected = [], []
    p_plus = _positive_z1_fraction(model)
    for lo, hi in zip(edges[:-1], edges[1:]):
        in_shell = (r > lo) & (r <= hi)
        shell_p = (model.rate_above(lo) - (0.0 if math.isinf(hi) else model.rate_above(hi))) / total
        for s, frac in ((True, p_plus), (False, 1.0 - p_plus)):
            if frac == 0.0:
                continue
            counts.append(float((in_shell & (sgn == s)).sum()))
            expected.append(n * shell_p * frac)
    counts, expected = np.array(counts), np.array(expected)
    ok = expected > 1e-12
    stat = ((counts[ok] - expected[ok]) ** 2 / expected[ok]).sum()
    return float(stats.chi2.sf(stat, df=ok.sum() - 1))


def _positive_z1_fraction(model: LevyModel) -> float:
    if model.kind == "half_space_stable":
        return 1.0
    return 0.5
