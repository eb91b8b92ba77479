"""Coupled simulation of jump SDE pairs.

The two marginals follow dX = b(X)dt + dZ.  Jumps above the truncation
radius eps arrive by per-step Poisson thinning; at each jump z the second
marginal additionally moves by +(U)_kappa, -(U)_kappa or 0 (U = X - Y)
according to the overlap ratios of the jump density, which shrinks or grows
the distance by exactly kappa and coalesces the pair once the distance is
below kappa.  kappa = 0 degenerates to the synchronous coupling.

All per-path randomness is drawn up front from a stream keyed by
(master_seed, path_index); the evolution loop itself is deterministic and
runs in the compiled kernel when available.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _backend, _fallback
from ..measures import LevyModel
from ..models import DriftModel, ScenarioSpec

__all__ = [
    "SimConfig",
    "CouplingPath",
    "EnsembleResult",
    "BlowUpError",
    "reflect_vector",
    "coupling_jump_decision",
    "simulate_coupling",
    "simulate_marginal",
    "run_coupling_ensemble",
    "backend_name",
]

DECISION_NAMES = ("toward", "away", "common")


def backend_name() -> str:
    return _backend.BACKEND


class BlowUpError(RuntimeError):
    """Raised when a path leaves the finite range; carries the last finite
    recorded state."""

    def __init__(self, step, last_state):
        super().__init__(f"non-finite state at step {step}")
        self.step = step
        self.last_state = last_state

    def __reduce__(self):
        # default exception reduction drops the second argument, which
        # breaks unpickling in worker pools and deadlocks the pool
        return (BlowUpError, (self.step, self.last_state))


@dataclass(frozen=True)
class SimConfig:
    kappa: float
    eps: float
    h: float
    t_max: float
    n_paths: int
    master_seed: int
    small_jump_mode: str = "drop"
    record_every: int = 1

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if not 0 < self.h <= self.t_max:
            raise ValueError("need 0 < h <= t_max")
        # kappa = 0 is allowed and selects the synchronous baseline
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.n_paths < 1 or self.record_every < 1:
            raise ValueError("n_paths and record_every must be >= 1")

    @property
    def n_steps(self) -> int:
        n = int(round(self.t_max / self.h))
        return max(n, 1)


@dataclass
class CouplingPath:
    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    r: np.ndarray
    coupling_time: Optional[float]
    events: Optional[list] = None


@dataclass
class EnsembleResult:
    times: np.ndarray
    distances: np.ndarray        # (n_paths, n_rec)
    coupling_times: np.ndarray   # inf where never coupled
    x_final: np.ndarray
    y_final: np.ndarray


def reflect_vector(x, y, kappa: float) -> np.ndarray:
    """(x - y)_kappa: the difference, radially clipped to length kappa."""
    u = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = float(np.linalg.norm(u))
    if r <= kappa or r == 0.0:
        return u
    return (kappa / r) * u


def coupling_jump_decision(u: float, rho_minus: float, rho_plus: float) -> str:
    if not (0.0 <= rho_minus <= 1.0 and 0.0 <= rho_plus <= 1.0):
        raise ValueError("overlap ratios must lie in [0, 1]")
    if u <= 0.5 * rho_minus:
        return "toward"
    if u <= 0.5 * (rho_minus + rho_plus):
        return "away"
    return "common"


def _encode_drift(drift: DriftModel):
    if drift.kind == "zero":
        return _fallback.DRIFT_ZERO, np.zeros(4), None
    if drift.kind == "linear_dissipative":
        return _fallback.DRIFT_LINEAR, np.array([drift.K2, 0.0, 0.0, 0.0]), None
    if drift.kind == "piecewise":
        dp = np.array([drift.params["K2_raw"], drift.K1, drift.l0 / 2.0, 0.0])
        return _fallback.DRIFT_PIECEWISE, dp, None
    if drift.kind == "gradient_superlinear":
        dp = np.array([2.0 + drift.theta, drift.theta, 0.0, 0.0])
        return _fallback.DRIFT_SUPERLINEAR, dp, None
    b = drift.b
    return _fallback.DRIFT_CUSTOM, np.zeros(4), lambda v: np.asarray(
        b(np.asarray(v, dtype=float)), dtype=float)


def _encode_noise(model: LevyModel):
    d = model.dim
    dummy = np.zeros((1, d)), np.zeros(1)
    if model.kind in ("isotropic_stable", "truncated_isotropic_stable"):
        npar = np.array([d + model.alpha, model.intensity,
                         model.trunc_radius, 0.0])
        return _fallback.NOISE_RADIAL_POWER, npar, *dummy
    if model.kind == "half_space_stable":
        npar = np.array([d + model.alpha, model.intensity, np.inf, 0.0])
        return _fallback.NOISE_HALF_SPACE, npar, *dummy
    if model.kind == "compound_poisson":
        atoms = np.ascontiguousarray(model.atoms, dtype=float)
        gaps = [np.linalg.norm(a - b) for i, a in enumerate(atoms)
                for b in atoms[i + 1:]]
        atol = 0.25 * min(gaps) if gaps else 1e-9 * (
            1.0 + np.abs(atoms).max())
        npar = np.array([0.0, 0.0, 0.0, atol])
        return _fallback.NOISE_ATOMS, npar, atoms, np.ascontiguousarray(
            model.weights, dtype=float)
    raise ValueError(f"unsupported noise kind {model.kind!r}")


def _draw_randomness(model: LevyModel, cfg: SimConfig, rng):
    """Pre-draw every random quantity a path consumes, in a fixed order."""
    d = model.dim
    n_steps = cfg.n_steps
    rate = model.rate_above(cfg.eps)
    counts = rng.poisson(cfg.h * rate, n_steps).astype(np.int64)
    total = int(counts.sum())
    if total > 0:
        jumps = np.ascontiguousarray(model.sample_jumps(rng, total, cfg.eps))
    else:
        jumps = np.zeros((0, d))
    us = rng.uniform(size=total)
    if cfg.small_jump_mode == "gaussian_substitute":
        gauss = rng.standard_normal((n_steps, d))
        sig = math.sqrt(model.small_jump_moment(cfg.eps) / d)
    else:
        gauss, sig = None, 0.0
    return counts, jumps, us, gauss, sig


def _run_path(x0, y0, drift, noise, cfg, path_index, event_log=False):
    d = noise.dim
    n_steps = cfg.n_steps
    if n_steps % cfg.record_every != 0:
        raise ValueError("record_every must divide the step count")
    n_rec = n_steps // cfg.record_every + 1
    rng = np.random.default_rng([cfg.master_seed, path_index])
    counts, jumps, us, gauss, sig = _draw_randomness(noise, cfg, rng)
    dcode, dp, drift_fn = _encode_drift(drift)
    ncode, npar, atoms, weights = _encode_noise(noise)
    out_x = np.empty((n_rec, d))
    out_y = np.empty((n_rec, d))
    out_r = np.empty(n_rec)
    events = [] if event_log else None
    kernel = _backend.evolve_path
    if event_log or dcode == _fallback.DRIFT_CUSTOM:
        kernel = _fallback.evolve_path
    args = (np.asarray(x0, float), np.asarray(y0, float), cfg.h, n_steps,
            cfg.kappa, counts, jumps, us, gauss, sig, dcode, dp, ncode, npar,
            atoms, weights, cfg.record_every, out_x, out_y, out_r)
    if kernel is _fallback.evolve_path:
        ret = kernel(*args, drift_fn=drift_fn, events=events)
    else:
        ret = kernel(*args)
    if ret <= -2:
        step = -(ret + 2)
        raise BlowUpError(step, (out_x, out_y))
    times = np.arange(n_rec) * (cfg.h * cfg.record_every)
    t_couple = None if ret < 0 else ret * cfg.h
    return CouplingPath(times=times, x=out_x, y=out_y, r=out_r,
                        coupling_time=t_couple, events=events)


def simulate_coupling(scenario: ScenarioSpec, cfg: SimConfig, path_index: int,
                      event_log: bool = False) -> CouplingPath:
    return _run_path(scenario.x0, scenario.y0, scenario.drift, scenario.noise,
                     cfg, path_index, event_log=event_log)


def simulate_marginal(x0, drift: DriftModel, noise: LevyModel, cfg: SimConfig,
                      path_index: int):
    """Single-marginal Euler path with the same jump machinery.

    Implemented as a pair started coupled, so the jump stream and step
    ordering are identical to the coupled scheme.
    """
    p = _run_path(x0, x0, drift, noise, cfg, path_index)
    return p.times, p.x


# fork-inherited task state for the worker pool; chunks are passed as index
# ranges so nothing non-picklable crosses the process boundary
_TASK = None


def _run_chunk(bounds):
    lo, hi = bounds
    scenario, cfg = _TASK
    n_rec = cfg.n_steps // cfg.record_every + 1
    dist = np.empty((hi - lo, n_rec))
    tcpl = np.empty(hi - lo)
    xf = np.empty((hi - lo, scenario.dim))
    yf = np.empty((hi - lo, scenario.dim))
    for k, idx in enumerate(range(lo, hi)):
        p = simulate_coupling(scenario, cfg, idx)
        dist[k] = p.r
        tcpl[k] = np.inf if p.coupling_time is None else p.coupling_time
        xf[k] = p.x[-1]
        yf[k] = p.y[-1]
    return dist, tcpl, xf, yf


def run_coupling_ensemble(scenario: ScenarioSpec, cfg: SimConfig,
                          workers: int = 1) -> EnsembleResult:
    """Simulate cfg.n_paths coupled paths and collect distance curves.

    Results are reduced in path-index order, so the output is independent
    of the worker count.
    """
    global _TASK
    n = cfg.n_paths
    chunk = max(1, -(-n // (max(workers, 1) * 4)))
    bounds = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
    _TASK = (scenario, cfg)
    try:
        if workers > 1:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(workers) as pool:
                parts = pool.map(_run_chunk, bounds)
        else:
            parts = [_run_chunk(b) for b in bounds]
    finally:
        _TASK = None
    dist = np.concatenate([p[0] for p in parts])
    tcpl = np.concatenate([p[1] for p in parts])
    xf = np.concatenate([p[2] for p in parts])
    yf = np.concatenate([p[3] for p in parts])
    n_rec = cfg.n_steps // cfg.record_every + 1
    times = np.arange(n_rec) * (cfg.h * cfg.record_every)
    return EnsembleResult(times=times, distances=dist, coupling_times=tcpl,
                          x_final=xf, y_final=yf)
