"""Explicit contraction and regularity certificates.

Chain of objects:

* :class:`SigmaG` wraps a nondecreasing concave rate function sigma on
  (0, 2l0] together with the integrals g1(r) = int_0^r ds/sigma(s) and
  g2(r) = int_0^r phi1(s)/(s sigma(s)) ds.  The canonical construction
  :func:`build_sigma` calibrates sigma(s) = b2 s^(1-alpha) log(b0/s)^(1+theta)
  against the jump-overlap profile J.
* :class:`TestFunction` is the concave distance transform
  psi(r) = c1 r + int_0^r exp(-c2 g(s)) ds, with a linear tail (kinds
  "w1"/"tv"), a bounded tail driven by the contraction profile phi2
  (kind "strong_ergodic"), and an optional jump a at 0+ (kinds
  "tv"/"strong_ergodic").
* Certificate constructors turn a drift profile plus a SigmaG into explicit
  decay rates, then :func:`verify_condition_C` re-checks the differential
  inequality they rely on over a log grid.

All integrals are cumulative per-segment Gauss-Legendre on a log-spaced
grid with analytic/adaptive treatment of the integrable singularity at 0,
so evaluations are deterministic and accurate to ~1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

__all__ = [
    "SigmaG",
    "TestFunction",
    "RateCertificate",
    "ConditionReport",
    "build_sigma",
    "w1_certificate",
    "tv_certificate",
    "strong_ergodic_certificate",
    "w1_constants",
    "tv_constants",
    "generator_apply",
    "verify_condition_C",
    "grid_j_infimum",
    "regularity_constants",
    "certificate_record",
]

_GLX, _GLW = np.polynomial.legendre.leggauss(7)

# log-grid resolution for the cumulative integrals: u-span below 2l0 and
# number of segments
_U_SPAN = 34.0
_N_SEG = 4096


class OverlapInsufficientError(RuntimeError):
    """The jump-overlap profile J is not positive where a certificate
    needs it."""


def _vectorize(fn, probe=None):
    # the probe must lie inside fn's domain, or a genuinely vectorized fn
    # would be misclassified and wrapped in a slow per-element loop
    if probe is None:
        probe = np.array([0.5, 1.0])
    try:
        out = fn(probe)
        if np.shape(out) == (2,):
            return fn
    except Exception:
        pass
    return np.vectorize(fn, otypes=[float])


class _CumIntegral:
    """Cumulative integral of f over (0, s_max] on a log-spaced grid.

    Nodes s_k = s_max * exp(-(U_SPAN) * (1 - k/n)); each segment integral is
    a 7-point Gauss-Legendre rule in u = log s, and the mass below the first
    node comes from adaptive quadrature on the substituted variable, which
    turns an algebraic/logarithmic endpoint singularity of f into a decaying
    smooth integrand.
    """

    def __init__(self, fn, s_max, n_seg=_N_SEG, u_span=_U_SPAN, bounded=False):
        self.s_max = float(s_max)
        self.fn = _vectorize(fn, probe=np.array([0.25, 0.5]) * self.s_max)
        self.bounded = bool(bounded)
        u_hi = math.log(self.s_max)
        u_lo = u_hi - u_span
        self.u_nodes = np.linspace(u_lo, u_hi, n_seg + 1)
        self.s_min = math.exp(u_lo)
        # int f(s) ds = int f(e^u) e^u du
        centers = 0.5 * (self.u_nodes[1:] + self.u_nodes[:-1])
        half = 0.5 * (self.u_nodes[1] - self.u_nodes[0])
        pts = centers[:, None] + half * _GLX[None, :]
        vals = self._fu(pts.ravel()).reshape(pts.shape)
        seg = half * (vals @ _GLW)
        if self.bounded:
            # f stays O(1) near 0, so the mass below s_min is at most of order
            # s_min = e^{-U_SPAN} s_max, far below the working tolerance;
            # a one-point rule avoids re-entrant quadrature when evaluating f
            # itself requires integration
            f0 = float(self.fn(np.array([self.s_min]))[0])
            tail, tail_err = self.s_min * f0, self.s_min * max(1.0, abs(f0))
        else:
            tail, tail_err = self._tail_quad(u_lo)
        self.tail0 = tail
        self.tail0_err = abs(tail_err)
        self.cum = np.concatenate([[tail], tail + np.cumsum(seg)])

    def _tail_quad(self, u_hi):
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return integrate.quad(lambda u: self._fu(np.array([u]))[0],
                                  -np.inf, u_hi, limit=400,
                                  epsabs=1e-13, epsrel=1e-11)

    def _fu(self, u):
        # s = e^u underflows to 0 for the huge negative u an infinite-range
        # quadrature probes; the integrand vanishes there
        s = np.exp(np.asarray(u, dtype=float))
        out = np.zeros_like(s)
        pos = s > 0
        if np.any(pos):
            with np.errstate(all="ignore"):
                out[pos] = self.fn(s[pos]) * s[pos]
        # near-subnormal s can underflow intermediates like s*sigma(s) to 0
        # and produce spurious inf; for an integrable singularity the true
        # value of f(s)*s there is below any working tolerance
        out[~np.isfinite(out) & (s < 1e-150)] = 0.0
        return out

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        if np.any(r < 0) or np.any(r > self.s_max * (1 + 1e-12)):
            raise ValueError("argument outside (0, s_max]")
        r = np.minimum(r, self.s_max)
        out = np.zeros_like(r)
        pos = r > 0
        small = pos & (r < self.s_min)
        for i in np.nonzero(small)[0]:
            if self.bounded:
                out[i] = r[i] * float(self.fn(np.array([r[i]]))[0])
            else:
                out[i] = self._tail_quad(math.log(r[i]))[0]
        big = pos & ~small
        if np.any(big):
            u_r = np.log(r[big])
            k = np.clip(np.searchsorted(self.u_nodes, u_r) - 1, 0,
                        len(self.u_nodes) - 2)
            u_k = self.u_nodes[k]
            centers = 0.5 * (u_k + u_r)
            half = 0.5 * (u_r - u_k)
            pts = centers[:, None] + half[:, None] * _GLX[None, :]
            vals = self._fu(pts.ravel()).reshape(pts.shape)
            out[big] = self.cum[k] + half * (vals @ _GLW)
        return float(out[0]) if scalar else out


def _zero(r):
    return np.zeros_like(np.asarray(r, dtype=float))


@dataclass
class SigmaG:
    """A rate function sigma with its singular integrals g1, g2."""

    sigma: Callable
    l0: float
    phi1: Callable = None
    kappa: Optional[float] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.l0 <= 0:
            raise ValueError("SigmaG requires l0 > 0; the l0 = 0 case is "
                             "handled by the certificate constructors")
        self.sigma = _vectorize(self.sigma)
        if self.phi1 is None:
            self.phi1 = _zero
        ph = _vectorize(self.phi1)
        self._g1 = _CumIntegral(lambda s: 1.0 / self.sigma(s), 2.0 * self.l0)
        self._g2 = _CumIntegral(lambda s: ph(s) / (s * self.sigma(s)),
                                2.0 * self.l0)
        self._phi1v = ph

    def g1(self, r):
        return self._g1(r)

    def g2(self, r):
        return self._g2(r)

    def g(self, r, c2, use_g2=True):
        if not use_g2:
            return self.g1(r)
        return self.g1(r) + (2.0 / c2) * self.g2(r)

    def g_prime(self, r, c2, use_g2=True):
        r = np.asarray(r, dtype=float)
        base = 1.0 / self.sigma(r)
        if use_g2:
            base = base + (2.0 / c2) * self._phi1v(r) / (r * self.sigma(r))
        return base


def build_sigma(J, kappa, l0, alpha, theta, phi1=None, n_grid=256,
                safety=0.95) -> SigmaG:
    """Calibrate the canonical rate function against the overlap profile J.

    sigma(s) = b2 s^(1-alpha) log(b0/s)^(1+theta) with
    b0 = 2 l0 exp((1+theta)/(1-alpha)) and b2 the largest constant (times a
    safety factor) keeping sigma(s) <= J(kappa ^ s)(kappa ^ s)^2 / (2s) on a
    log grid over (0, 2l0].
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1) for this construction")
    if theta <= 0 or l0 <= 0 or kappa <= 0:
        raise ValueError("need theta > 0, l0 > 0, kappa > 0")
    b0 = 2.0 * l0 * math.exp((1.0 + theta) / (1.0 - alpha))
    grid = np.exp(np.linspace(math.log(2e-6 * l0), math.log(2.0 * l0),
                              n_grid))
    Jv = _vectorize(J)
    sk = np.minimum(grid, kappa)
    jvals = np.array([Jv(np.array([v]))[0] for v in sk])
    bound = jvals * sk ** 2 / (2.0 * grid)
    shape = grid ** (1.0 - alpha) * np.log(b0 / grid) ** (1.0 + theta)
    ratio = bound / shape
    if np.min(ratio) <= 0:
        raise OverlapInsufficientError(
            "overlap profile vanishes on the calibration grid")
    b2 = safety * float(np.min(ratio))

    def sigma(s):
        s = np.asarray(s, dtype=float)
        return b2 * s ** (1.0 - alpha) * np.log(b0 / s) ** (1.0 + theta)

    return SigmaG(sigma=sigma, l0=l0, phi1=phi1, kappa=kappa,
                  params={"b0": b0, "b2": b2, "alpha": alpha, "theta": theta,
                          "safety": safety})


class TestFunction:
    __test__ = False    # not a test case, despite the name
    """Concave distance transform psi with optional jump a at 0+.

    On [0, 2l0]: psi(r) = c1 r + int_0^r exp(-c2 g(s)) ds.  Beyond 2l0 the
    w1/tv kinds extend linearly with the continuous slope 2 c1; the
    strong_ergodic kind extends by
    psi(2l0) + psi'(2l0) phi2(2l0) int_{2l0}^r ds/phi2(s), which is bounded
    when the tail integral converges.  psi_total adds the jump:
    a 1_(r>0) + psi(r).
    """

    def __init__(self, kind, c1, c2, sg: Optional[SigmaG], l0, a=0.0,
                 phi2=None, K2=None):
        if kind not in ("w1", "tv", "strong_ergodic"):
            raise ValueError(f"unknown test function kind {kind!r}")
        self.kind = kind
        self.c1 = float(c1)
        self.c2 = float(c2)
        self.l0 = float(l0)
        self.a = float(a)
        self.sg = sg
        self.phi2 = phi2
        self.K2 = K2
        self._use_g2 = kind == "w1"
        if sg is None:
            if l0 != 0:
                raise ValueError("sg may be omitted only in the l0 = 0 case")
            self._cum = None
        else:
            self._cum = _CumIntegral(
                lambda s: np.exp(-self.c2 * sg.g(s, self.c2, self._use_g2)),
                2.0 * l0, bounded=True)
        if kind == "strong_ergodic":
            if phi2 is None:
                raise ValueError("strong_ergodic needs the phi2 profile")
            self._phi2v = _vectorize(phi2)
            self._check_tail()

    def _check_tail(self):
        lo = 2.0 * self.l0
        inv = lambda s: 1.0 / self._phi2v(np.array([s]))[0]
        head, _ = integrate.quad(inv, lo, 1e4 * lo, limit=200)
        far, _ = integrate.quad(inv, 1e4 * lo, 1e8 * lo, limit=200)
        if far > 1e-3 * max(head, 1e-300):
            raise ValueError("tail integral of 1/phi2 does not converge; "
                             "no bounded test function exists")
        rest, _ = integrate.quad(inv, 1e8 * lo, np.inf, limit=200)
        self.tail_integral = head + far + rest
        self.psi_sup = self.psi(lo) + self.dpsi(lo) * \
            self._phi2v(np.array([lo]))[0] * self.tail_integral

    def _tail_T(self, r):
        lo = 2.0 * self.l0
        inv = lambda s: 1.0 / self._phi2v(np.array([s]))[0]
        return np.array([integrate.quad(inv, lo, ri, limit=200)[0]
                         for ri in np.atleast_1d(r)])

    def psi(self, r):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        if self._cum is None:
            out = 2.0 * r
        else:
            lo = 2.0 * self.l0
            inner = np.minimum(r, lo)
            out = self.c1 * inner + self._cum(inner)
            over = r > lo
            if np.any(over):
                if self.kind == "strong_ergodic":
                    p2 = self._phi2v(np.array([lo]))[0]
                    out[over] += 2.0 * self.c1 * p2 * self._tail_T(r[over])
                else:
                    out[over] += 2.0 * self.c1 * (r[over] - lo)
        return float(out[0]) if scalar else out

    def dpsi(self, r):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        if self._cum is None:
            out = np.full_like(r, 2.0)
        else:
            lo = 2.0 * self.l0
            inner = np.minimum(r, lo)
            out = self.c1 + np.exp(-self.c2 * self.sg.g(inner, self.c2,
                                                        self._use_g2))
            over = r > lo
            if np.any(over):
                if self.kind == "strong_ergodic":
                    p2lo = self._phi2v(np.array([lo]))[0]
                    out[over] = 2.0 * self.c1 * p2lo / self._phi2v(r[over])
                else:
                    out[over] = 2.0 * self.c1
        return float(out[0]) if scalar else out

    def d2psi(self, r):
        """Second derivative on (0, 2l0]; 0 on the linear tail."""
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        if self._cum is None:
            out = np.zeros_like(r)
        else:
            lo = 2.0 * self.l0
            inner = np.minimum(r, lo)
            gp = self.sg.g_prime(inner, self.c2, self._use_g2)
            out = -self.c2 * gp * np.exp(
                -self.c2 * self.sg.g(inner, self.c2, self._use_g2))
            out[r > lo] = 0.0
        return float(out[0]) if scalar else out

    def psi_total(self, r):
        """a 1_(r>0) + psi(r): the distance transform actually contracted."""
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        out = self.psi(r) + np.where(r > 0, self.a, 0.0)
        return float(out[0]) if scalar else out


@dataclass
class RateCertificate:
    kind: str
    c1: float
    c2: float
    C: float
    lam: float
    kappa: float
    a: float = 0.0
    J_kappa: float = float("nan")
    status: str = "unverified"
    provenance: str = ""

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("certificate rate must be positive")
        if self.kind == "w1" and self.C < 1.0 - 1e-12:
            raise ValueError("w1 prefactor must be >= 1")


def certificate_record(cert: RateCertificate, scenario: str = "") -> dict:
    return {
        "scenario": scenario, "kind": cert.kind, "c1": cert.c1,
        "c2": cert.c2, "C": cert.C, "lambda": cert.lam, "kappa": cert.kappa,
        "a": cert.a, "J_kappa": cert.J_kappa, "status": cert.status,
        "provenance": cert.provenance,
    }


def w1_constants(K2, g1_2l0, g_2l0):
    """The explicit constant chain for the Wasserstein contraction.

    c2 = (2 K2) ^ g1(2l0)^-1; c1 = exp(-c2 g(2l0)); C = (1+c1)/(2c1);
    lambda = c2 / (1 + exp(c2 g(2l0))).
    """
    c2 = min(2.0 * K2, 1.0 / g1_2l0) if g1_2l0 > 0 else 2.0 * K2
    c1 = math.exp(-c2 * g_2l0)
    C = (1.0 + c1) / (2.0 * c1)
    lam = c2 / (1.0 + math.exp(c2 * g_2l0))
    return c1, c2, C, lam


def tv_constants(c1, K1, K2, g_2l0, psi_kappa, J_kappa):
    """Jump-mass correction constants for the total-variation bound.

    m = (2 K2) ^ g(2l0)^-1; a = (2/J_kappa)(K1(c1+1) + m c1 psi(kappa)/(c1+1));
    lambda = (c1/(c1+1)) m (1 + a/psi(kappa))^-1.
    """
    m = min(2.0 * K2, 1.0 / g_2l0) if g_2l0 > 0 else 2.0 * K2
    frac = c1 / (c1 + 1.0)
    a = (2.0 / J_kappa) * (K1 * (c1 + 1.0) + frac * m * psi_kappa)
    lam = frac * m / (1.0 + a / psi_kappa)
    return a, lam


def grid_j_infimum(J, kappa, n=64) -> float:
    """inf of J over (0, kappa] taken on a log grid (flagged grid-infimum)."""
    grid = np.exp(np.linspace(math.log(1e-3 * kappa), math.log(kappa), n))
    Jv = _vectorize(J)
    return float(min(Jv(np.array([s]))[0] for s in grid))


def _linear_test_function(K2):
    # degenerate l0 = 0 limit: g == 0, c1 = 1, psi(r) = 2r
    return TestFunction(kind="w1", c1=1.0, c2=2.0 * K2, sg=None, l0=0.0)


def w1_certificate(drift, sg: Optional[SigmaG], J=None, kappa=None):
    """Wasserstein contraction certificate for a drift profile.

    Needs the short-range expansion profile phi1 (concave, phi1(0)=0) with
    tail contraction at linear rate K2.  Returns (RateCertificate,
    TestFunction); the differential inequality is re-verified on a grid when
    the overlap profile J is supplied.
    """
    K2 = drift.K2
    if K2 <= 0:
        raise ValueError("w1 certificate needs a positive tail rate K2")
    if drift.l0 == 0:
        tf = _linear_test_function(K2)
        cert = RateCertificate(kind="w1", c1=1.0, c2=2.0 * K2, C=1.0,
                               lam=K2, kappa=0.0, status="exact",
                               provenance="w1-contraction-formula/"
                                          "uniform-dissipative-limit")
        return cert, tf
    if sg is None or abs(sg.l0 - drift.l0) > 1e-12 * max(1.0, drift.l0):
        raise ValueError("sg must be built for the drift's l0")
    l2 = 2.0 * drift.l0
    g1v = sg.g1(l2)
    c2 = min(2.0 * K2, 1.0 / g1v) if g1v > 0 else 2.0 * K2
    gv = sg.g(l2, c2, use_g2=True)
    c1, c2, C, lam = w1_constants(K2, g1v, gv)
    tf = TestFunction(kind="w1", c1=c1, c2=c2, sg=sg, l0=drift.l0, K2=K2)
    cert = RateCertificate(kind="w1", c1=c1, c2=c2, C=C, lam=lam,
                           kappa=kappa if kappa is not None
                           else (sg.kappa or float("nan")),
                           provenance="w1-contraction-formula/"
                                      + _sigma_tag(sg))
    _maybe_verify(cert, tf, drift, J)
    return cert, tf


def tv_certificate(drift, sg: SigmaG, kappa, J_kappa=None, J=None):
    """Total-variation contraction certificate.

    Requires 0 < kappa <= l0 and a positive grid infimum J_kappa of the
    overlap profile on (0, kappa].  The emitted bound has the form
    |delta_x P_t - delta_y P_t|_Var <= 2 e^{-lam t} (1 + psi(|x-y|)/a).
    """
    l0 = drift.l0
    if l0 <= 0:
        raise ValueError("tv certificate needs l0 > 0; with l0 = 0 use the "
                         "w1 route and the coupling inequality directly")
    if not 0 < kappa <= l0:
        raise ValueError("need 0 < kappa <= l0")
    if J_kappa is None:
        if J is None:
            raise ValueError("supply J_kappa or the profile J")
        J_kappa = grid_j_infimum(J, kappa)
    if J_kappa <= 0:
        raise OverlapInsufficientError("grid infimum of J on (0, kappa] "
                                       "is not positive")
    # constant short-range expansion rate: phi1(r) <= K1c for r < l0
    K1c = _constant_phi1(drift)
    K2 = drift.K2
    l2 = 2.0 * l0
    gv = sg.g1(l2)
    c2 = 2.0 * K1c / kappa + (min(2.0 * K2, 1.0 / gv) if gv > 0
                              else 2.0 * K2)
    c1 = math.exp(-c2 * gv)
    tf = TestFunction(kind="tv", c1=c1, c2=c2, sg=sg, l0=l0, K2=K2)
    psi_k = tf.psi(kappa)
    a, lam = tv_constants(c1, K1c, K2, gv, psi_k, J_kappa)
    tf.a = a
    cert = RateCertificate(kind="tv", c1=c1, c2=c2,
                           C=2.0 * (1.0 + psi_k / a), lam=lam, kappa=kappa,
                           a=a, J_kappa=J_kappa,
                           provenance="tv-coupling-time-bound/"
                                      + _sigma_tag(sg))
    _maybe_verify(cert, tf, drift, J)
    return cert, tf


def strong_ergodic_certificate(drift, sg: SigmaG, kappa, J_kappa=None,
                               J=None, n_grid=512):
    """Uniform-in-initial-condition total-variation certificate.

    Needs a contraction profile phi2 that is eventually increasing with
    convergent tail integral of 1/phi2.  The rate is the grid infimum of
    (-Theta(r)) / (a + psi(r)) over the three proof regimes and is
    numeric-grade, not closed-form.
    """
    l0 = drift.l0
    if l0 <= 0 or not 0 < kappa <= l0:
        raise ValueError("need 0 < kappa <= l0")
    if J_kappa is None:
        if J is None:
            raise ValueError("supply J_kappa or the profile J")
        J_kappa = grid_j_infimum(J, kappa)
    if J_kappa <= 0:
        raise OverlapInsufficientError("grid infimum of J on (0, kappa] "
                                       "is not positive")
    K1c = _constant_phi1(drift)
    l2 = 2.0 * l0
    gv = sg.g1(l2)
    phi2 = _vectorize(drift.phi2)
    # free linear-rate parameter of the constant chain; mirrors the tv choice
    K2s = min(phi2(np.array([l2]))[0] / l2,
              0.5 / gv if gv > 0 else np.inf)
    if K2s <= 0:
        raise ValueError("phi2 must be positive at 2*l0")
    c2 = 2.0 * (K2s + K1c / kappa)
    c1 = math.exp(-c2 * gv)
    tf = TestFunction(kind="strong_ergodic", c1=c1, c2=c2, sg=sg, l0=l0,
                      phi2=drift.phi2, K2=K2s)
    psi_k = tf.psi(kappa)
    a = (2.0 / J_kappa) * (K1c * (c1 + 1.0)
                           + 2.0 * K2s * c1 / (c1 + 1.0) * psi_k)
    tf.a = a

    # lambda = inf over regimes of (-Theta(r)) / (a + psi(r))
    ratios = []
    theta_low = K1c * (c1 + 1.0) - 0.5 * a * J_kappa
    if theta_low >= 0:
        raise OverlapInsufficientError("short-range drift expansion beats "
                                       "the coalescence mass")
    ratios.append(-theta_low / (a + psi_k))
    mid = np.exp(np.linspace(math.log(kappa), math.log(l0), n_grid))
    th_mid = 0.5 * J_kappa * kappa ** 2 * tf.d2psi(mid) \
        + K1c * tf.dpsi(mid)
    ratios.append(float(np.min(-th_mid / (a + tf.psi(mid)))))
    far = np.exp(np.linspace(math.log(l0), math.log(l2), n_grid // 2))
    th_far = -phi2(far) * tf.dpsi(far)
    ratios.append(float(np.min(-th_far / (a + tf.psi(far)))))
    ratios.append(2.0 * c1 * phi2(np.array([l2]))[0] / (a + tf.psi_sup))
    lam = min(ratios)
    if lam <= 0:
        raise OverlapInsufficientError("no positive rate on the grid")
    cert = RateCertificate(kind="strong_ergodic", c1=c1, c2=c2,
                           C=2.0 * (1.0 + tf.psi_sup / a), lam=lam,
                           kappa=kappa, a=a, J_kappa=J_kappa,
                           provenance="strong-ergodic-bounded-transform/"
                                      "numeric-grid-rate/" + _sigma_tag(sg))
    _maybe_verify(cert, tf, drift, J)
    return cert, tf


def _constant_phi1(drift) -> float:
    """Least constant upper bound of phi1 on (0, l0)."""
    if drift.l0 == 0:
        return 0.0
    grid = np.linspace(drift.l0 * 1e-6, drift.l0, 257)
    ph = _vectorize(drift.phi1)
    return float(np.max(ph(grid)))


def _sigma_tag(sg: Optional[SigmaG]) -> str:
    if sg is None:
        return "no-sigma"
    if "b2" in sg.params:
        return "canonical-sigma(alpha={alpha:g},theta={theta:g})".format(
            **sg.params)
    return "user-sigma"


def generator_apply(f, mass, drift_proj, r, kappa, fprime=None):
    """Distance-process generator: (mass/2)[f(r + k^r) + f(r - k^r) - 2f(r)]
    + f'(r) drift_proj / r, with k^r = kappa ^ r."""
    if isinstance(f, TestFunction):
        fn, fp = f.psi_total, f.dpsi
    else:
        fn = f
        fp = fprime if fprime is not None else (
            lambda s: (f(s + 1e-7) - f(s - 1e-7)) / 2e-7)
    d = min(kappa, r)
    second = fn(r + d) + fn(r - d) - 2.0 * fn(r)
    return 0.5 * mass * second + fp(r) * drift_proj / r


@dataclass
class ConditionReport:
    passed: bool
    worst_margin: float
    worst_r: float
    grid: np.ndarray
    margins: np.ndarray


def verify_condition_C(tf: TestFunction, lam, kappa, drift, J=None,
                       grid=None, tol=-1e-10) -> ConditionReport:
    """Grid check of the differential inequality behind a certificate.

    Short range (r < l0): (1/2) J(kappa^r) [psi_n(r + kappa^r) +
    psi_n(r - kappa^r) - 2 psi_n(r)] + phi1-term <= -lam psi_n(r).
    Long range (r >= l0): -phi2(r) psi_n'(r) <= -lam psi_n(r).
    Necessary-but-not-sufficient: a pass is labeled "grid-verified".
    """
    l0 = tf.l0
    if grid is None:
        lo = max(1e-6 * l0, 1e-9)
        hi = max(10.0 * l0, 10.0)
        grid = np.exp(np.linspace(math.log(lo), math.log(hi), 512))
    grid = np.asarray(grid, dtype=float)
    phi1 = _vectorize(drift.phi1)
    phi2 = _vectorize(drift.phi2)
    psin = tf.psi_total
    margins = np.empty_like(grid)
    jcache = {}

    def jval(s):
        if J is None:
            return None
        key = round(math.log(s), 12)
        if key not in jcache:
            jcache[key] = float(_vectorize(J)(np.array([s]))[0])
        return jcache[key]

    for i, r in enumerate(grid):
        if r < l0 and tf._cum is not None:
            d = min(kappa, r) if kappa > 0 else 0.0
            if d > 0:
                mass = jval(min(kappa, r))
                if mass is None:
                    raise ValueError("short-range check needs the overlap "
                                     "profile J")
                second = psin(r + d) + (psin(r - d) if r > d else 0.0) \
                    - 2.0 * psin(r)
                theta = 0.5 * mass * second
            else:
                theta = 0.0
            if tf.kind == "w1":
                theta += phi1(np.array([r]))[0] * tf.dpsi(r)
            else:
                theta += _constant_phi1(drift) * tf.dpsi(r)
        else:
            theta = -phi2(np.array([r]))[0] * tf.dpsi(r)
        margins[i] = -lam * psin(r) - theta
    k = int(np.argmin(margins))
    return ConditionReport(passed=bool(margins[k] >= tol),
                           worst_margin=float(margins[k]),
                           worst_r=float(grid[k]), grid=grid,
                           margins=margins)


def _maybe_verify(cert: RateCertificate, tf: TestFunction, drift, J):
    if J is None and tf._cum is not None:
        cert.status = "unverified"
        return
    if tf._cum is None:
        # l0 = 0: the short-range regime is empty and the long-range check
        # -K2 r * 2 = -lam * 2r holds with equality
        cert.status = "exact"
        return
    rep = verify_condition_C(tf, cert.lam, cert.kappa, drift, J)
    cert.status = ("grid-verified" if rep.passed
                   else f"grid-failed(worst={rep.worst_margin:.3e}"
                        f"@r={rep.worst_r:.3e})")


def sigma_bound_violation(sg: SigmaG, J, kappa, n=256) -> float:
    """Largest excess of sigma over J(kappa^s)(kappa^s)^2/(2s) on a grid;
    <= 0 means the calibration constraint holds there."""
    grid = np.exp(np.linspace(math.log(2e-6 * sg.l0),
                              math.log(2.0 * sg.l0), n))
    Jv = _vectorize(J)
    sk = np.minimum(grid, kappa)
    jvals = np.array([Jv(np.array([v]))[0] for v in sk])
    return float(np.max(sg.sigma(grid) - jvals * sk ** 2 / (2.0 * grid)))


def regularity_constants(phi, dphi, d2phi, K1, J, eps, n_grid=512):
    """Short-range modulus constants for semigroup regularity.

    A_eps = inf_{0<r<=eps} { (1/2) J(r) (2 phi(r) - phi(2r)) - K1 phi'(r) r };
    B_eps = -sup_{0<r<=eps} J(r) r^2 phi''(2r); the gradient bound is
    2 |f|_inf inf_eps [1/phi(eps) + 1/(t A_eps)] over the supplied eps values.
    """
    eps_list = np.atleast_1d(np.asarray(eps, dtype=float))
    phi_, dphi_, d2phi_ = map(_vectorize, (phi, dphi, d2phi))
    Jv = _vectorize(J)
    out = {"eps": eps_list, "A": np.empty_like(eps_list),
           "B": np.empty_like(eps_list)}
    for k, e in enumerate(eps_list):
        r = np.exp(np.linspace(math.log(1e-6 * e), math.log(e), n_grid))
        jr = np.array([Jv(np.array([v]))[0] for v in r])
        a_vals = 0.5 * jr * (2.0 * phi_(r) - phi_(2.0 * r)) \
            - K1 * dphi_(r) * r
        out["A"][k] = float(np.min(a_vals))
        out["B"][k] = -float(np.max(jr * r ** 2 * d2phi_(2.0 * r)))
    usable = out["A"] > 0
    if not np.any(usable):
        raise ValueError("no regularity certificate: A_eps <= 0 at every "
                         "supplied eps")

    def gradient_bound(t, f_norm):
        vals = [1.0 / phi_(np.array([e]))[0] + 1.0 / (t * a)
                for e, a, ok in zip(eps_list, out["A"], usable) if ok]
        return 2.0 * f_norm * min(vals)

    out["gradient_bound"] = gradient_bound
    return out
