import math

import numpy as np
from numba import njit

from .torus_systems._kernels import (P_AU, P_DUX, apply_point, fibp, inverse_point,
                                     jacobian_point, rot, rotp, wrap)


@njit(cache=True, nogil=True)
def cu_push_slope(par, x, y, z, s):
    """Slope vz/vu of DF_p (d_u + s d_z) in the frame at F(p)."""
    gp = fibp(par, wrap(z + rot(par, x)))
    duh = gp * rotp(par, x) * par[P_DUX]
    return (duh + gp * s) / par[P_AU]


@njit(cache=True, nogil=True)
def eu_slopes(par, pts, n_back, extra, out_s, out_inc):
    """E^u slope at each point by pushing d_u forward from a deep preimage.

    out_inc holds the Cauchy increment between depths n_back and n_back+extra.
    Returns False if a fiber inverse failed.
    """
    depth = n_back + extra
    bx = np.empty(depth + 1)
    by = np.empty(depth + 1)
    bz = np.empty(depth + 1)
    for i in range(pts.shape[0]):
        x, y, z = pts[i, 0], pts[i, 1], pts[i, 2]
        bx[0], by[0], bz[0] = x, y, z
        for k in range(1, depth + 1):
            x, y, z = inverse_point(par, x, y, z)
            if z != z:
                return False
            bx[k], by[k], bz[k] = x, y, z
        s_deep = 0.0
        for k in range(depth, 0, -1):
            s_deep = cu_push_slope(par, bx[k], by[k], bz[k], s_deep)
        s = 0.0
        for k in range(n_back, 0, -1):
            s = cu_push_slope(par, bx[k], by[k], bz[k], s)
        out_s[i] = s_deep
        out_inc[i] = abs(s_deep - s)
    return True


@njit(cache=True, nogil=True)
def _mgs(m, q, logs):
    # modified Gram-Schmidt with one re-orthogonalisation pass
    for j in range(3):
        v0 = m[0, j]
        v1 = m[1, j]
        v2 = m[2, j]
        for _ in range(2):
            for i in range(j):
                r = q[0, i] * v0 + q[1, i] * v1 + q[2, i] * v2
                v0 -= r * q[0, i]
                v1 -= r * q[1, i]
                v2 -= r * q[2, i]
        nrm = math.sqrt(v0 * v0 + v1 * v1 + v2 * v2)
        q[0, j] = v0 / nrm
        q[1, j] = v1 / nrm
        q[2, j] = v2 / nrm
        logs[j] = math.log(nrm)


@njit(cache=True, nogil=True)
def lyapunov_qr(par, x, y, z, q0, n, n_transient, n_batches):
    q = q0.copy()
    jac = np.empty((3, 3))
    m = np.empty((3, 3))
    logs = np.empty(3)
    batch = n // n_batches
    sums = np.zeros((n_batches, 3))
    total = np.zeros(3)
    for it in range(n_transient + n):
        jacobian_point(par, x, y, z, jac)
        for a in range(3):
            for b in range(3):
                m[a, b] = jac[a, 0] * q[0, b] + jac[a, 1] * q[1, b] + jac[a, 2] * q[2, b]
        _mgs(m, q, logs)
        if it >= n_transient:
            k = (it - n_transient) // batch
            for j in range(3):
                total[j] += logs[j]
                if k < n_batches:
                    sums[k, j] += logs[j]
        x, y, z = apply_point(par, x, y, z)
    return total / n, sums / batch, np.array([x, y, z])


@njit(cache=True, nogil=True)
def central_sum(par, x, y, z, n, n_transient, n_batches):
    batch = n // n_batches
    sums = np.zeros(n_batches)
    total = 0.0
    for it in range(n_transient + n):
        v = math.log(fibp(par, wrap(z + rot(par, x))))
        if it >= n_transient:
            total += v
            k = (it - n_transient) // batch
            if k < n_batches:
                sums[k] += v
        x, y, z = apply_point(par, x, y, z)
    return total / n, sums / batch


@njit(cache=True, nogil=True)
def central_profile(par, pts, n):
    out = np.empty(pts.shape[0])
    for i in range(pts.shape[0]):
        x, y, z = pts[i, 0], pts[i, 1], pts[i, 2]
        acc = 0.0
        for _ in range(n):
            acc += math.log(fibp(par, wrap(z + rot(par, x))))
            x, y, z = apply_point(par, x, y, z)
        out[i] = acc
    return out


@njit(cache=True, nogil=True)
def growth_ratios(par, pts, t0, n_max):
    """min over 0 < n <= n_max of |DF^n v| alpha_u^-n / |v|, v = d_u + t0 d_z."""
    out = np.empty(pts.shape[0])
    for i in range(pts.shape[0]):
        x, y, z = pts[i, 0], pts[i, 1], pts[i, 2]
        s = t0[i]
        base = math.sqrt(1.0 + s * s)
        best = 1e300
        for _ in range(n_max):
            s = cu_push_slope(par, x, y, z, s)
            x, y, z = apply_point(par, x, y, z)
            r = math.sqrt(1.0 + s * s) / base
            if r < best:
                best = r
        out[i] = best
    return out
