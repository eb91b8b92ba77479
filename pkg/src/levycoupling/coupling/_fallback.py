"""Pure-Python evolution kernel.

Mirror of the compiled kernel in ``_core.pyx``; both consume the same
pre-drawn random arrays, so a path is reproducible from (seed, path index)
alone.  Drift and density families are dispatched on small integer codes so
the compiled kernel never calls back into Python; code -1 falls back to an
arbitrary Python drift callable and is only available here.
"""

from __future__ import annotations

import math

# drift codes
DRIFT_ZERO = 0
DRIFT_LINEAR = 1
DRIFT_PIECEWISE = 2
DRIFT_SUPERLINEAR = 3
DRIFT_CUSTOM = -1

# noise codes
NOISE_RADIAL_POWER = 0      # q(z) = c|z|^-(d+alpha), |z| <= R
NOISE_HALF_SPACE = 1        # same radial law restricted to 0 < z_1 <= 1
NOISE_ATOMS = 2


def _drift_coef(code, dp, r, h):
    # radial drifts b(x) = coef(|x|) * x; returns coef
    if code == DRIFT_ZERO:
        return 0.0
    if code == DRIFT_LINEAR:
        return -dp[0]
    if code == DRIFT_PIECEWISE:
        K2, K1, a = dp[0], dp[1], dp[2]
        bump = (1.0 - r / a) ** 2 if r < a else 0.0
        return -K2 + (K1 + K2) * bump
    if code == DRIFT_SUPERLINEAR:
        # tamed increment: plain Euler is unstable when a large jump lands
        # where h |b'(x)| > 2, so divide by 1 + h |b(x)|
        c = -dp[0] * r ** dp[1]
        return c / (1.0 + h * abs(c) * r)
    raise ValueError("bad drift code")


def _density(z, d, code, npar, atoms, weights):
    if code == NOISE_ATOMS:
        atol = npar[3]
        for k in range(atoms.shape[0]):
            dist = 0.0
            for j in range(d):
                dist += (z[j] - atoms[k, j]) ** 2
            if dist <= atol * atol:
                return weights[k]
        return 0.0
    if code == NOISE_HALF_SPACE and not (0.0 < z[0] <= 1.0):
        return 0.0
    r2 = 0.0
    for j in range(d):
        r2 += z[j] * z[j]
    r = math.sqrt(r2)
    if r == 0.0 or r > npar[2]:
        return 0.0
    return npar[1] * r ** -npar[0]


def evolve_path(x0, y0, h, n_steps, kappa, counts, jumps, us, gauss,
                sig_small, drift_code, dp, noise_code, npar, atoms, weights,
                record_every, out_x, out_y, out_r, drift_fn=None,
                events=None):
    """Run one coupled path on pre-drawn randomness.

    Returns the 1-based index of the step during which the pair coalesced,
    0 if it started coupled, -1 if never.  Records state every
    ``record_every`` steps into the ``out_*`` arrays (row 0 is the initial
    state).
    """
    d = len(x0)
    x = [float(v) for v in x0]
    y = [float(v) for v in y0]
    coupled = all(x[j] == y[j] for j in range(d))
    coupled_step = 0 if coupled else -1
    sqh = math.sqrt(h)

    r0 = math.sqrt(sum((x[j] - y[j]) ** 2 for j in range(d)))
    for j in range(d):
        out_x[0, j] = x[j]
        out_y[0, j] = y[j]
    out_r[0] = 0.0 if coupled else r0

    jp = 0
    rec = 1
    for i in range(n_steps):
        if drift_code == DRIFT_CUSTOM:
            bx = drift_fn(x)
            for j in range(d):
                x[j] += h * float(bx[j])
            if not coupled:
                by = drift_fn(y)
                for j in range(d):
                    y[j] += h * float(by[j])
        else:
            rx = math.sqrt(sum(v * v for v in x))
            cx = _drift_coef(drift_code, dp, rx, h)
            for j in range(d):
                x[j] += h * cx * x[j]
            if not coupled:
                ry = math.sqrt(sum(v * v for v in y))
                cy = _drift_coef(drift_code, dp, ry, h)
                for j in range(d):
                    y[j] += h * cy * y[j]

        for _ in range(counts[i]):
            z = jumps[jp]
            u = us[jp]
            jp += 1
            if coupled:
                for j in range(d):
                    x[j] += z[j]
                continue
            r = math.sqrt(sum((x[j] - y[j]) ** 2 for j in range(d)))
            if r == 0.0 or kappa == 0.0:
                for j in range(d):
                    x[j] += z[j]
                    y[j] += z[j]
                continue
            scale = 1.0 if r <= kappa else kappa / r
            uk = [scale * (x[j] - y[j]) for j in range(d)]
            qz = _density(z, d, noise_code, npar, atoms, weights)
            zs = [z[j] + uk[j] for j in range(d)]
            rho_m = min(qz, _density(zs, d, noise_code, npar, atoms, weights)) / qz
            for j in range(d):
                zs[j] = z[j] - uk[j]
            rho_p = min(qz, _density(zs, d, noise_code, npar, atoms, weights)) / qz
            if u <= 0.5 * rho_m:
                decision = 0          # toward
                for j in range(d):
                    x[j] += z[j]
                    y[j] += z[j] + uk[j]
                if r <= kappa:
                    coupled = True
                    coupled_step = i + 1
                    for j in range(d):
                        y[j] = x[j]
            elif u <= 0.5 * (rho_m + rho_p):
                decision = 1          # away
                for j in range(d):
                    x[j] += z[j]
                    y[j] += z[j] - uk[j]
            else:
                decision = 2          # common
                for j in range(d):
                    x[j] += z[j]
                    y[j] += z[j]
            if events is not None:
                events.append(((i + 1) * h, r, decision,
                               math.sqrt(sum(v * v for v in z))))

        if gauss is not None:
            for j in range(d):
                w = sig_small * sqh * gauss[i, j]
                x[j] += w
                if not coupled:
                    y[j] += w
        if coupled:
            for j in range(d):
                y[j] = x[j]

        if (i + 1) % record_every == 0:
            ok = True
            for j in range(d):
                out_x[rec, j] = x[j]
                out_y[rec, j] = y[j]
                ok = ok and math.isfinite(x[j]) and math.isfinite(y[j])
            out_r[rec] = 0.0 if coupled else math.sqrt(
                sum((x[j] - y[j]) ** 2 for j in range(d)))
            if not ok:
                return -2 - i       # blow-up sentinel: encodes the step
            rec += 1
    return coupled_step
