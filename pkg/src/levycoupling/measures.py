"""Jump-intensity measures with densities and their overlap machinery.

A :class:`LevyModel` describes one pure-jump noise law through its intensity
density ``q(z)`` (rate per unit volume), together with exact samplers for the
jumps above a truncation radius.  The overlap quantities computed here drive
both the coupling simulator (through the control ratio) and the contraction
certificates (through the worst-case overlap function over a sphere).

Supported families:

* ``isotropic_stable``            q(z) = c / |z|^(d+alpha)
* ``truncated_isotropic_stable``  same, restricted to |z| <= R
* ``half_space_stable``           same, restricted to 0 < z_1 <= 1
* ``compound_poisson``            finite list of atoms (z_i, w_i)

For the atomic family the "density" is the weight function on the atom set and
all overlap integrals degenerate to exact finite sums.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

__all__ = [
    "LevyModel",
    "OverlapEvaluation",
    "overlap_ratio",
    "overlap_mass",
    "j_function",
    "half_space_overlap_floor",
    "shift_identity_residual",
]

_ATOM_TOL = 1e-9

# surface area of the unit sphere S^{d-1}
def sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


class DensityDomainError(ValueError):
    """Raised when a density evaluation returns a non-finite value."""


class QuadratureError(RuntimeError):
    """Raised when an overlap quadrature fails to converge; carries the last
    estimate and its error bound."""

    def __init__(self, msg, estimate, error):
        super().__init__(msg)
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class LevyModel:
    """One noise law: density, samplers and truncation data.

    ``intensity`` is the multiplicative constant c of the stable-type
    families; it is ignored for ``compound_poisson``.
    """

    kind: str
    dim: int
    alpha: float = 0.0
    intensity: float = 1.0
    trunc_radius: float = math.inf
    atoms: np.ndarray | None = None          # (n_atoms, dim)
    weights: np.ndarray | None = None        # (n_atoms,)

    def __post_init__(self):
        if self.kind not in (
            "isotropic_stable",
            "truncated_isotropic_stable",
            "half_space_stable",
            "compound_poisson",
        ):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind != "compound_poisson":
            if not 0.0 < self.alpha < 2.0:
                raise ValueError("alpha must lie in (0, 2)")
            if self.intensity <= 0:
                raise ValueError("intensity must be positive")
        else:
            if self.atoms is None or len(self.atoms) == 0:
                raise ValueError("compound_poisson needs a nonempty atom list")
            a = np.atleast_2d(np.asarray(self.atoms, dtype=float))
            w = np.asarray(self.weights, dtype=float)
            if np.any(w <= 0):
                raise ValueError("atom rates must be positive")
            if np.any(np.linalg.norm(a, axis=1) < _ATOM_TOL):
                raise ValueError("atom at the origin is not a jump")
            object.__setattr__(self, "atoms", a)
            object.__setattr__(self, "weights", w)

    # ---------------------------------------------------------- density

    def density(self, z):
        """Evaluate q at a point of shape (dim,) or a batch (n, dim)."""
        z = np.asarray(z, dtype=float)
        single = z.ndim == 1
        zb = np.atleast_2d(z)
        r = np.linalg.norm(zb, axis=1)
        if self.kind == "compound_poisson":
            out = np.zeros(len(zb))
            for atom, w in zip(self.atoms, self.weights):
                out[np.linalg.norm(zb - atom, axis=1) <= _ATOM_TOL] = w
        else:
            with np.errstate(divide="ignore", over="ignore"):
                out = np.where(r > 0.0,
                               self.intensity * r ** -(self.dim + self.alpha),
                               np.inf)
            if self.kind == "truncated_isotropic_stable":
                out = np.where(r <= self.trunc_radius, out, 0.0)
            elif self.kind == "half_space_stable":
                out = np.where((zb[:, 0] > 0.0) & (zb[:, 0] <= 1.0), out, 0.0)
        if np.any(np.isnan(out)):
            bad = zb[np.isnan(out)][0]
            raise DensityDomainError(f"density not finite at z={bad}")
        return float(out[0]) if single else out

    # ------------------------------------------------------------ rates

    def rate_above(self, eps: float) -> float:
        """Total jump rate nu({|z| > eps})."""
        if eps <= 0:
            raise ValueError("eps must be positive")
        c, a, d = self.intensity, self.alpha, self.dim
        if self.kind == "compound_poisson":
            r = np.linalg.norm(self.atoms, axis=1)
            return float(self.weights[r > eps].sum())
        if self.kind == "isotropic_stable":
            return c * sphere_area(d) * eps ** -a / a
        if self.kind == "truncated_isotropic_stable":
            if eps >= self.trunc_radius:
                return 0.0
            return c * sphere_area(d) * (eps ** -a - self.trunc_radius ** -a) / a
        # half space
        if d == 1:
            if eps >= 1.0:
                return 0.0
            return c * (eps ** -a - 1.0) / a
        if d == 2:
            # angular measure of {0 < r cos(phi) <= 1} is pi for r <= 1,
            # 2 arcsin(1/r) beyond
            head = 0.0
            if eps < 1.0:
                head = math.pi * (eps ** -a - 1.0) / a
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                tail, _ = integrate.quad(
                    lambda r: r ** (-1.0 - a) * 2.0 * math.asin(1.0 / r),
                    max(eps, 1.0), math.inf, limit=200)
            return c * (head + tail)
        raise NotImplementedError("half_space_stable rate only for d <= 2")

    def small_jump_moment(self, eps: float) -> float:
        """Second moment of the sub-eps jump part, int_{|z|<=eps} |z|^2 q dz."""
        c, a, d = self.intensity, self.alpha, self.dim
        if self.kind == "compound_poisson":
            r = np.linalg.norm(self.atoms, axis=1)
            return float((self.weights[r <= eps] * r[r <= eps] ** 2).sum())
        e = min(eps, self.trunc_radius)
        full = c * sphere_area(d) * e ** (2.0 - a) / (2.0 - a)
        if self.kind == "half_space_stable":
            if eps > 1.0:
                raise NotImplementedError("half-space small-jump moment for eps > 1")
            return full / 2.0
        return full

    # ---------------------------------------------------------- sampler

    def sample_jumps(self, rng: np.random.Generator, n: int, eps: float) -> np.ndarray:
        """Draw n jumps from the normalized law of {|z| > eps}, shape (n, dim)."""
        d, a = self.dim, self.alpha
        if self.kind == "compound_poisson":
            r = np.linalg.norm(self.atoms, axis=1)
            keep = r > eps
            w = self.weights[keep]
            idx = rng.choice(np.flatnonzero(keep), size=n, p=w / w.sum())
            return self.atoms[idx]
        R = self.trunc_radius
        if self.kind in ("isotropic_stable", "truncated_isotropic_stable"):
            radii = _sample_radial(rng, n, a, eps, R)
            dirs = _sample_sphere(rng, n, d)
            return radii[:, None] * dirs
        # half space: rejection against the isotropic proposal with z_1 > 0
        out = np.empty((n, d))
        got = 0
        while got < n:
            m = max(2 * (n - got), 64)
            radii = _sample_radial(rng, m, a, eps, math.inf)
            dirs = _sample_sphere(rng, m, d)
            dirs[:, 0] = np.abs(dirs[:, 0])
            cand = radii[:, None] * dirs
            ok = (cand[:, 0] > 0.0) & (cand[:, 0] <= 1.0)
            take = min(int(ok.sum()), n - got)
            out[got:got + take] = cand[ok][:take]
            got += take
        return out

    def min_atom_gap(self) -> float:
        if self.kind != "compound_poisson":
            return 0.0
        return float(np.linalg.norm(self.atoms, axis=1).min())


def _sample_radial(rng, n, alpha, eps, R):
    """Inverse-CDF radii from r^{-1-alpha} dr restricted to (eps, R]."""
    u = rng.uniform(size=n)
    lo = eps ** -alpha
    hi = 0.0 if math.isinf(R) else R ** -alpha
    return (lo - u * (lo - hi)) ** (-1.0 / alpha)


def _sample_sphere(rng, n, d):
    if d == 1:
        return np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0)[:, None]
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# =====================================================================
# Overlap quantities
# =====================================================================

@dataclass(frozen=True)
class OverlapEvaluation:
    """Total mass of the common part of q and its shift by x."""

    x: np.ndarray
    mass: float
    quadrature_error: float
    underflow: bool = False


def overlap_ratio(model: LevyModel, x, z) -> float:
    """Control ratio min(q(z), q(z-x)) / q(z), in [0, 1].

    Returns 1 when x = 0 and 0 on the (null) set where q(z) = 0.
    """
    x = np.asarray(x, dtype=float).reshape(model.dim)
    z = np.asarray(z, dtype=float).reshape(model.dim)
    if float(np.linalg.norm(z)) == 0.0:
        raise ValueError("overlap_ratio undefined at z = 0")
    if float(np.linalg.norm(x)) == 0.0:
        return 1.0
    qz = model.density(z)
    if qz == 0.0:
        return 0.0
    qs = model.density(z - x)
    return min(1.0, qs / qz) if math.isfinite(qz) else (1.0 if qs == np.inf else 0.0)


def overlap_mass(model: LevyModel, x, rtol: float = 1e-8) -> OverlapEvaluation:
    """Total mass of min(q(z), q(z-x)) dz, with a reported error bound.

    Exact finite sum for compound Poisson; adaptive quadrature otherwise.
    """
    x = np.asarray(x, dtype=float).reshape(model.dim)
    s = float(np.linalg.norm(x))
    if s == 0.0:
        raise ValueError("overlap_mass requires x != 0")
    if model.kind == "compound_poisson":
        mass = 0.0
        for atom, w in zip(model.atoms, model.weights):
            shifted = atom - x
            for a2, w2 in zip(model.atoms, model.weights):
                if np.linalg.norm(shifted - a2) <= _ATOM_TOL:
                    mass += min(w, w2)
        return OverlapEvaluation(x=x, mass=mass, quadrature_error=0.0)
    if model.dim == 1:
        mass, err = _overlap_mass_1d(model, float(x[0]), rtol)
    elif model.dim == 2:
        mass, err = _overlap_mass_2d(model, x, rtol)
    else:
        raise NotImplementedError("overlap quadrature implemented for d <= 2")
    return OverlapEvaluation(x=x, mass=mass, quadrature_error=err,
                             underflow=(mass == 0.0))


def _support_edges_1d(model: LevyModel):
    if model.kind == "half_space_stable":
        return [0.0, 1.0]
    if model.kind == "truncated_isotropic_stable":
        R = model.trunc_radius
        return [-R, R]
    return []


def _overlap_mass_1d(model, x, rtol):
    f = lambda z: min(model.density(np.array([z])),
                      model.density(np.array([z - x])))
    # the min switches branch at the bisector x/2; singular envelopes at 0, x
    edges = _support_edges_1d(model)
    pts = sorted({0.0, x, x / 2.0} | set(edges) | {e + x for e in edges})
    total, err = 0.0, 0.0
    segments = [(-math.inf, pts[0])]
    segments += [(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]
    segments += [(pts[-1], math.inf)]
    if edges:
        # bounded support: the min vanishes outside the intersection of the
        # two supports, so clip the segment list to it
        lo_s = max(edges[0], edges[0] + x)
        hi_s = min(edges[-1], edges[-1] + x)
        if hi_s <= lo_s:
            return 0.0, 0.0
        segments = [(max(lo, lo_s), min(hi, hi_s)) for lo, hi in segments]
    for lo, hi in segments:
        if hi - lo <= 0:
            continue
        # near-singular envelopes make quad warn while still returning a
        # usable value with an honest error estimate, which we propagate
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            v, e = integrate.quad(f, lo, hi, epsrel=rtol, epsabs=1e-13,
                                  limit=200)
        total += v
        err += e
    return total, err


def _overlap_mass_2d(model, x, rtol):
    """Polar product quadrature around the midpoint of 0 and x, with
    annulus-doubling convergence control and an analytic tail bound."""
    s = float(np.linalg.norm(x))
    mid = x / 2.0
    r_min = 1e-9 * max(s, 1.0)
    r_max = 1e6 * max(s, 1.0, min(model.trunc_radius, 1e6))

    def total(n_rad, n_ang):
        edges = np.geomspace(r_min, r_max, n_rad + 1)
        # Gauss-Legendre in log r per annulus, trapezoid in angle
        gl_x, gl_w = np.polynomial.legendre.leggauss(8)
        phi = np.linspace(0.0, 2.0 * math.pi, n_ang, endpoint=False)
        acc = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            la, lb = math.log(lo), math.log(hi)
            lr = 0.5 * (lb - la) * gl_x + 0.5 * (la + lb)
            r = np.exp(lr)
            w = 0.5 * (lb - la) * gl_w * r * r  # r dr = r^2 dlog r
            zz = (mid[None, None, :]
                  + r[:, None, None] * np.stack([np.cos(phi), np.sin(phi)], axis=-1)[None, :, :])
            pts = zz.reshape(-1, 2)
            vals = np.minimum(model.density(pts), model.density(pts - x)).reshape(len(r), n_ang)
            acc += float((w[:, None] * vals).sum()) * (2.0 * math.pi / n_ang)
        return acc

    prev = total(48, 128)
    cur = total(96, 256)
    err = abs(cur - prev)
    if err > max(rtol * abs(cur), 1e-10):
        prev, cur = cur, total(192, 512)
        err = abs(cur - prev)
    # mass <= 2 nu({|z| >= r_max - s}) bounds what the grid misses
    tail = 2.0 * model.rate_above(max(r_max - s, r_max / 2.0))
    return cur, err + tail


def j_function(model: LevyModel, s: float, n_directions: int | None = None,
               rtol: float = 1e-8) -> float:
    """Worst-case overlap mass over displacements of length s.

    Direction-independent families are evaluated at s*e_1.  For anisotropic
    families the value is the minimum over a direction grid on the sphere
    (an upper envelope of the true infimum, not a certified bound).
    """
    if s <= 0:
        raise ValueError("s must be positive")
    if model.kind in ("isotropic_stable", "truncated_isotropic_stable"):
        x = np.zeros(model.dim)
        x[0] = s
        return overlap_mass(model, x, rtol).mass
    if n_directions is None:
        n_directions = 64 * model.dim
    best = math.inf
    for x in _direction_grid(model, s, n_directions):
        best = min(best, overlap_mass(model, x, rtol).mass)
        if best == 0.0:
            break
    return best


def _direction_grid(model, s, n):
    """Direction grid reduced by the symmetries mass(x) = mass(-x) and, for
    the half-space family, mirror symmetry in the coordinates z_2..z_d."""
    if model.dim == 1:
        return [np.array([s])]      # -s gives the same mass
    if model.dim == 2:
        if model.kind == "half_space_stable":
            # quarter circle suffices: x -> -x and z_2 -> -z_2 symmetries
            ang = np.linspace(0.0, math.pi / 2.0, max(n // 4, 9))
        else:
            ang = np.linspace(0.0, math.pi, n // 2, endpoint=False)
        return [s * np.array([math.cos(t), math.sin(t)]) for t in ang]
    raise NotImplementedError("direction grids implemented for d <= 2")


def half_space_overlap_floor(d: int, alpha: float, c: float, s: float) -> float:
    """Certified analytic lower bound on the worst-case overlap of the
    half-space stable family at displacement scale s <= 1/4."""
    if s > 0.25:
        raise ValueError("the analytic floor is valid for s <= 1/4")
    w = sphere_area(d)
    return (c * w / (2.0 ** (d + 1 + alpha) * alpha)) * (1.0 - 3.0 ** -alpha) * s ** -alpha


def tabulated_j(model: LevyModel, s_min: float, s_max: float,
                n: int = 64, rtol: float = 1e-8):
    """Monotone log-log interpolant of the overlap profile J.

    Samples :func:`j_function` at n log-spaced nodes and interpolates with a
    shape-preserving cubic, so repeated profile queries during certificate
    construction cost an interpolation instead of a quadrature.  Queries
    outside [s_min, s_max] fall back to the exact evaluation.
    """
    from scipy.interpolate import PchipInterpolator

    nodes = np.geomspace(s_min, s_max, n)
    vals = np.array([j_function(model, s, rtol=rtol) for s in nodes])
    if np.any(vals <= 0):
        # zero overlap somewhere: no positive interpolant, stay exact
        return lambda s: j_function(model, float(np.atleast_1d(s)[0]),
                                    rtol=rtol)
    interp = PchipInterpolator(np.log(nodes), np.log(vals), extrapolate=False)

    def J(s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty_like(s_arr)
        inside = (s_arr >= s_min) & (s_arr <= s_max)
        if np.any(inside):
            out[inside] = np.exp(interp(np.log(s_arr[inside])))
        for i in np.nonzero(~inside)[0]:
            out[i] = j_function(model, float(s_arr[i]), rtol=rtol)
        return out if np.ndim(s) else float(out[0])

    return J


def shift_identity_residual(model: LevyModel, x, grid) -> float:
    """Pointwise residual of shifting the common part of q and its translate.

    Both min(q(z-x), q(z-2x)) and the x-shift of min(q(z), q(z-x)) are the
    same function analytically; the returned max-abs difference over the grid
    bounds floating-point noise only.
    """
    x = np.asarray(x, dtype=float).reshape(model.dim)
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if float(np.linalg.norm(x)) == 0.0:
        return 0.0
    lhs = np.minimum(model.density(grid - x), model.density(grid - 2.0 * x))
    zp = grid - x
    rhs = np.minimum(model.density(zp), model.density(zp - x))
    both_inf = np.isinf(lhs) & np.isinf(rhs)
    diff = np.abs(lhs - rhs)
    diff[both_inf] = 0.0
    return float(diff.max(initial=0.0))
