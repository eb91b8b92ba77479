"""Compiled evolution kernel; mirrors _fallback.evolve_path.

Same pre-drawn randomness contract and the same arithmetic per step, with
drift and density families dispatched on integer codes.  The Python-only
features (custom drift callables, event logs) stay in the fallback.
"""

import numpy as np

cimport cython
cimport numpy as cnp
from libc.math cimport sqrt, pow, fabs, isfinite

cnp.import_array()

DEF MAXD = 8

cdef int DRIFT_ZERO = 0
cdef int DRIFT_LINEAR = 1
cdef int DRIFT_PIECEWISE = 2
cdef int DRIFT_SUPERLINEAR = 3

cdef int NOISE_RADIAL_POWER = 0
cdef int NOISE_HALF_SPACE = 1
cdef int NOISE_ATOMS = 2


@cython.cdivision(True)
cdef inline double _drift_coef(int code, double* dp, double r, double h) nogil:
    cdef double bump
    cdef double c
    if code == DRIFT_ZERO:
        return 0.0
    if code == DRIFT_LINEAR:
        return -dp[0]
    if code == DRIFT_PIECEWISE:
        if r < dp[2]:
            bump = (1.0 - r / dp[2]) ** 2
        else:
            bump = 0.0
        return -dp[0] + (dp[1] + dp[0]) * bump
    # tamed increment: plain Euler is unstable when a large jump lands
    # where h |b'(x)| > 2, so divide by 1 + h |b(x)|
    c = -dp[0] * pow(r, dp[1])
    return c / (1.0 + h * fabs(c) * r)


@cython.boundscheck(False)
@cython.wraparound(False)
@cython.cdivision(True)
cdef inline double _density(double* z, int d, int code, double* npar,
                            double[:, ::1] atoms, double[::1] weights) nogil:
    cdef int k, j
    cdef double dist, r2, r, atol
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
    r = sqrt(r2)
    if r == 0.0 or r > npar[2]:
        return 0.0
    return npar[1] * pow(r, -npar[0])


@cython.boundscheck(False)
@cython.wraparound(False)
@cython.cdivision(True)
def evolve_path(cnp.ndarray[double, ndim=1] x0,
                cnp.ndarray[double, ndim=1] y0,
                double h, long n_steps, double kappa,
                cnp.ndarray[long, ndim=1] counts,
                cnp.ndarray[double, ndim=2] jumps,
                cnp.ndarray[double, ndim=1] us,
                gauss, double sig_small,
                int drift_code, cnp.ndarray[double, ndim=1] dp,
                int noise_code, cnp.ndarray[double, ndim=1] npar,
                cnp.ndarray[double, ndim=2] atoms,
                cnp.ndarray[double, ndim=1] weights,
                long record_every,
                cnp.ndarray[double, ndim=2] out_x,
                cnp.ndarray[double, ndim=2] out_y,
                cnp.ndarray[double, ndim=1] out_r):
    cdef int d = x0.shape[0]
    if d > MAXD:
        raise ValueError("compiled kernel supports dimension <= 8")
    cdef double x[MAXD]
    cdef double y[MAXD]
    cdef double uk[MAXD]
    cdef double zs[MAXD]
    cdef double zv[MAXD]
    cdef int j
    cdef long i, jp = 0, rec = 1, kjump
    cdef bint coupled = True
    cdef long coupled_step = -1
    cdef double sqh = sqrt(h)
    cdef double r, rx, ry, cx, cy, scale, qz, rho_m, rho_p, u, w, acc
    cdef bint has_gauss = gauss is not None
    cdef double[:, ::1] gaussv
    cdef double[:, ::1] jumpsv = jumps
    cdef double[::1] usv = us
    cdef long[::1] countsv = counts
    cdef double[::1] dpv = dp
    cdef double[::1] nparv = npar
    cdef double[:, ::1] atomsv = atoms
    cdef double[::1] weightsv = weights
    cdef bint ok

    if has_gauss:
        gaussv = gauss

    for j in range(d):
        x[j] = x0[j]
        y[j] = y0[j]
        if x[j] != y[j]:
            coupled = False
    if coupled:
        coupled_step = 0

    acc = 0.0
    for j in range(d):
        acc += (x[j] - y[j]) ** 2
        out_x[0, j] = x[j]
        out_y[0, j] = y[j]
    out_r[0] = 0.0 if coupled else sqrt(acc)

    for i in range(n_steps):
        rx = 0.0
        for j in range(d):
            rx += x[j] * x[j]
        cx = _drift_coef(drift_code, &dpv[0], sqrt(rx), h)
        for j in range(d):
            x[j] += h * cx * x[j]
        if not coupled:
            ry = 0.0
            for j in range(d):
                ry += y[j] * y[j]
            cy = _drift_coef(drift_code, &dpv[0], sqrt(ry), h)
            for j in range(d):
                y[j] += h * cy * y[j]

        for kjump in range(countsv[i]):
            for j in range(d):
                zv[j] = jumpsv[jp, j]
            u = usv[jp]
            jp += 1
            if coupled:
                for j in range(d):
                    x[j] += zv[j]
                continue
            acc = 0.0
            for j in range(d):
                acc += (x[j] - y[j]) ** 2
            r = sqrt(acc)
            if r == 0.0 or kappa == 0.0:
                for j in range(d):
                    x[j] += zv[j]
                    y[j] += zv[j]
                continue
            scale = 1.0 if r <= kappa else kappa / r
            for j in range(d):
                uk[j] = scale * (x[j] - y[j])
            qz = _density(&zv[0], d, noise_code, &nparv[0], atomsv,
                          weightsv)
            for j in range(d):
                zs[j] = zv[j] + uk[j]
            rho_m = _density(&zs[0], d, noise_code, &nparv[0], atomsv,
                             weightsv)
            if rho_m > qz:
                rho_m = qz
            rho_m /= qz
            for j in range(d):
                zs[j] = zv[j] - uk[j]
            rho_p = _density(&zs[0], d, noise_code, &nparv[0], atomsv,
                             weightsv)
            if rho_p > qz:
                rho_p = qz
            rho_p /= qz
            if u <= 0.5 * rho_m:
                for j in range(d):
                    x[j] += zv[j]
                    y[j] += zv[j] + uk[j]
                if r <= kappa:
                    coupled = True
                    coupled_step = i + 1
                    for j in range(d):
                        y[j] = x[j]
            elif u <= 0.5 * (rho_m + rho_p):
                for j in range(d):
                    x[j] += zv[j]
                    y[j] += zv[j] - uk[j]
            else:
                for j in range(d):
                    x[j] += zv[j]
                    y[j] += zv[j]

        if has_gauss:
            for j in range(d):
                w = sig_small * sqh * gaussv[i, j]
                x[j] += w
                if not coupled:
                    y[j] += w
        if coupled:
            for j in range(d):
                y[j] = x[j]

        if (i + 1) % record_every == 0:
            ok = True
            acc = 0.0
            for j in range(d):
                out_x[rec, j] = x[j]
                out_y[rec, j] = y[j]
                acc += (x[j] - y[j]) ** 2
                if not (isfinite(x[j]) and isfinite(y[j])):
                    ok = False
            out_r[rec] = 0.0 if coupled else sqrt(acc)
            if not ok:
                return -2 - i
            rec += 1
    return coupled_step
