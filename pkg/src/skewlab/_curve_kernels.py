import math

import numpy as np
from numba import njit

from ._cocycle_kernels import cu_push_slope
from .torus_systems._kernels import P_AU, fib, fibinv, fibp, lift_delta, rot, wrap


@njit(cache=True, nogil=True)
def evaluate(par, backbone, du, t, z0, steps):
    """Points F^steps(seed(t)) for seed(t) = (B_0 + t du, z0(t)).

    The base of every node at step k is B_k + alpha_u^k t du, so all nodes
    stay on the unstable line through the backbone point B_k.
    """
    au = par[P_AU]
    out = np.empty((t.shape[0], 3))
    for i in range(t.shape[0]):
        z = wrap(z0[i])
        scale = 1.0
        for k in range(steps):
            x = wrap(backbone[k, 0] + scale * t[i] * du[0])
            z = wrap(fib(par, wrap(z + rot(par, x))))
            scale *= au
        out[i, 0] = wrap(backbone[steps, 0] + scale * t[i] * du[0])
        out[i, 1] = wrap(backbone[steps, 1] + scale * t[i] * du[1])
        out[i, 2] = z
    return out


@njit(cache=True, nogil=True)
def lifted(z, start):
    out = np.empty(z.shape[0])
    acc = start
    out[0] = acc
    for i in range(1, z.shape[0]):
        acc += lift_delta(z[i - 1], z[i])
        out[i] = acc
    return out


@njit(cache=True, nogil=True)
def _node_logj(par, back, du, u, z, n_trunc, n_back, bx, by, bz, sd, logj):
    """Fill logj[k] = log J^u at depth k (1 <= k <= n_trunc); return (slope, ok)."""
    au = par[P_AU]
    depth = n_trunc + n_back
    ok = True
    zz = z
    scale = 1.0
    bx[0] = wrap(back[0, 0] + u * du[0])
    by[0] = wrap(back[0, 1] + u * du[1])
    bz[0] = zz
    for k in range(1, depth + 1):
        scale /= au
        x = wrap(back[k, 0] + scale * u * du[0])
        y = wrap(back[k, 1] + scale * u * du[1])
        w = fibinv(par, zz)
        if w != w:
            ok = False
            w = 0.0
        zz = wrap(w - rot(par, x))
        bx[k], by[k], bz[k] = x, y, zz
    s = 0.0
    for k in range(depth, 0, -1):
        s = cu_push_slope(par, bx[k], by[k], bz[k], s)
        if k - 1 <= n_trunc:
            sd[k - 1] = s
    for k in range(1, n_trunc + 1):
        # J^u at depth k = alpha_u sqrt(1 + s_{k-1}^2) / sqrt(1 + s_k^2)
        logj[k] = math.log(au) + 0.5 * math.log1p(sd[k - 1] ** 2) \
            - 0.5 * math.log1p(sd[k] ** 2)
    return sd[0], ok


@njit(cache=True, nogil=True)
def density_sweep(par, back, du, u, z, ref, n_trunc, n_back, tol):
    """Log reference density (relative to node `ref`) and E^u slopes.

    back[k] is the k-fold backward backbone point; the base of node j at
    depth k is back[k] + u_j alpha_u^-k du (shared for all nodes so that
    backward orbits along one leaf converge instead of drifting apart).
    Returns (log_rho, slope, depth_used, ok).
    """
    m = u.shape[0]
    depth = n_trunc + n_back
    bx = np.empty(depth + 1)
    by = np.empty(depth + 1)
    bz = np.empty(depth + 1)
    sd = np.empty(n_trunc + 1)
    lref = np.empty(n_trunc + 1)
    lj = np.empty(n_trunc + 1)
    _, ok = _node_logj(par, back, du, u[ref], z[ref], n_trunc, n_back, bx, by, bz, sd, lref)
    logrho = np.zeros(m)
    slope = np.empty(m)
    used = np.zeros(m, dtype=np.int64)
    for j in range(m):
        s, okj = _node_logj(par, back, du, u[j], z[j], n_trunc, n_back, bx, by, bz, sd, lj)
        ok = ok and okj
        slope[j] = s
        acc = 0.0
        kk = n_trunc
        for k in range(1, n_trunc + 1):
            f = lref[k] - lj[k]
            acc += f
            if abs(f) < tol:
                kk = k
                break
        logrho[j] = acc
        used[j] = kk
    return logrho, slope, used, ok


@njit(cache=True, nogil=True)
def window_ratio(s, rho, ell):
    """max over i <= j with s_j - s_i <= ell of max(rho)/min(rho) on [i, j]."""
    m = s.shape[0]
    qmax = np.empty(m, dtype=np.int64)
    qmin = np.empty(m, dtype=np.int64)
    hmax = tmax = 0
    hmin = tmin = 0
    best = 1.0
    i = 0
    for j in range(m):
        while tmax > hmax and rho[qmax[tmax - 1]] <= rho[j]:
            tmax -= 1
        qmax[tmax] = j
        tmax += 1
        while tmin > hmin and rho[qmin[tmin - 1]] >= rho[j]:
            tmin -= 1
        qmin[tmin] = j
        tmin += 1
        while s[j] - s[i] > ell:
            i += 1
            if qmax[hmax] < i:
                hmax += 1
            if qmin[hmin] < i:
                hmin += 1
        r = rho[qmax[hmax]] / rho[qmin[hmin]]
        if r > best:
            best = r
    return best


@njit(cache=True, nogil=True)
def log_central(par, pts):
    out = np.empty(pts.shape[0])
    for i in range(pts.shape[0]):
        out[i] = math.log(fibp(par, wrap(pts[i, 2] + rot(par, pts[i, 0]))))
    return out
