"""Independent reference evaluation of the certificate constant chains.

Deliberately does not import the package: the chains are spelled out with
direct quadrature so the certificate implementation can be cross-checked
against a second, separately written derivation.
"""

import math

from scipy import integrate


def w1_chain_reference(K2, l0, sigma, phi1=None):
    """Wasserstein chain: c2 = (2 K2) ^ g1(2 l0)^-1, g = g1 + (2/c2) g2,
    c1 = exp(-c2 g(2 l0)), C = (1 + c1)/(2 c1), lam = c2/(1 + e^{c2 g(2 l0)}).
    """
    l2 = 2.0 * l0
    g1, _ = integrate.quad(lambda s: 1.0 / sigma(s), 0.0, l2, limit=400)
    c2 = min(2.0 * K2, 1.0 / g1) if g1 > 0 else 2.0 * K2
    if phi1 is None:
        g2 = 0.0
    else:
        g2, _ = integrate.quad(lambda s: phi1(s) / (s * sigma(s)), 0.0, l2,
                               limit=400)
    g = g1 + (2.0 / c2) * g2
    c1 = math.exp(-c2 * g)
    C = (1.0 + c1) / (2.0 * c1)
    lam = c2 / (1.0 + math.exp(c2 * g))
    return {"c1": c1, "c2": c2, "C": C, "lam": lam, "g1": g1, "g": g}


def tv_chain_reference(c1, K1, K2, g_2l0, psi_kappa, J_kappa):
    """Coupling-time chain: with m = (2 K2) ^ g(2 l0)^-1,
    a = (2/J_k)(K1 (c1+1) + [c1/(c1+1)] m psi(k)),
    lam = [c1/(c1+1)] m (1 + a/psi(k))^-1.
    """
    m = min(2.0 * K2, 1.0 / g_2l0) if g_2l0 > 0 else 2.0 * K2
    frac = c1 / (c1 + 1.0)
    a = (2.0 / J_kappa) * (K1 * (c1 + 1.0) + frac * m * psi_kappa)
    lam = frac * m / (1.0 + a / psi_kappa)
    return {"a": a, "lam": lam}


def psi_reference(r, c1, c2, g):
    """psi(r) = c1 r + int_0^r exp(-c2 g(s)) ds by direct quadrature."""
    v, _ = integrate.quad(lambda s: math.exp(-c2 * g(s)), 0.0, r, limit=400)
    return c1 * r + v


SQRT_CASE = {
    # sigma(s) = sqrt(s), Phi1 = 0, l0 = 1/2, K2 = 1:
    # g1(r) = 2 sqrt(r), g1(1) = 2, c2 = min(2, 1/2) = 1/2,
    # c1 = e^{-1}, C = (1+e^{-1})/(2 e^{-1}), lam = 0.5/(1+e)
    "c2": 0.5,
    "c1": math.exp(-1.0),
    "C": (1.0 + math.exp(-1.0)) / (2.0 * math.exp(-1.0)),
    "lam": 0.5 / (1.0 + math.e),
}

TV_NUMERIC_CASE = {
    # c1 = e^{-1}, K1 = 0, K2 = 1, g(2 l0) = 2, psi(kappa) = 0.3, J_k = 5
    "inputs": dict(c1=math.exp(-1.0), K1=0.0, K2=1.0, g_2l0=2.0,
                   psi_kappa=0.3, J_kappa=5.0),
}
TV_NUMERIC_CASE.update(tv_chain_reference(**TV_NUMERIC_CASE["inputs"]))
