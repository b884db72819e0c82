"""Compiled point kernels.

A system is flattened into one float64 parameter vector (see `pack` in
``spec.py``) so every numba kernel takes it as a single argument.  All
reductions to [0, 1) go through `wrap`.
"""
import math

import numpy as np
from numba import njit

# parameter vector layout
P_M11, P_M12, P_M21, P_M22 = 0, 1, 2, 3
P_FAM, P_FPAR = 4, 5
P_ROT, P_R1, P_R2 = 6, 7, 8
P_DELTA, P_FEEDBACK = 9, 10
P_AU, P_DUX, P_DUY = 11, 12, 13
NPAR = 16

FAM_SINE, FAM_PROJECTIVE = 0, 1
ROT_ZERO, ROT_LINEAR, ROT_SMOOTH, ROT_RARE = 0, 1, 2, 3

TWO_PI = 2.0 * math.pi
NEWTON_TOL = 1e-13
NEWTON_MAXIT = 100


@njit(cache=True, nogil=True)
def wrap(x):
    r = x - math.floor(x)
    # x slightly below an integer rounds up to exactly 1.0
    if r >= 1.0:
        r = 0.0
    return r


@njit(cache=True, nogil=True)
def lift_delta(a, b):
    """Signed displacement from a to b, in (-1/2, 1/2]."""
    d = b - a
    return d - math.ceil(d - 0.5)


# fiber maps, evaluated on the lift R -> R


@njit(cache=True, nogil=True)
def g_lift(fam, c, z):
    if fam == FAM_SINE:
        return z - c / TWO_PI * math.sin(TWO_PI * z)
    k = math.floor(z)
    u = math.pi * (z - k)
    # tan(pi g) = c tan(pi z) without the pole at z = 1/2
    return k + math.atan2(c * math.sin(u), math.cos(u)) / math.pi


@njit(cache=True, nogil=True)
def g_deriv(fam, c, z):
    if fam == FAM_SINE:
        return 1.0 - c * math.cos(TWO_PI * z)
    s = math.sin(math.pi * z)
    co = math.cos(math.pi * z)
    return c / (co * co + c * c * s * s)


@njit(cache=True, nogil=True)
def g_inverse(fam, c, t):
    """Solve g(w) = t on the lift; NaN if Newton/bisection fails.

    Safeguarded Newton on [k, k + 1].  The start is an explicit
    approximate inverse (exact for PROJECTIVE, whose inverse is the same
    family with 1/lambda), falling back to the midpoint.
    """
    k = math.floor(t)
    lo = k
    hi = k + 1.0
    if fam == FAM_SINE:
        w = t + c / TWO_PI * math.sin(TWO_PI * t)
    else:
        u = math.pi * (t - k)
        w = k + math.atan2(math.sin(u), c * math.cos(u)) / math.pi
    if not lo < w < hi:
        w = k + 0.5
    for _ in range(NEWTON_MAXIT):
        f = g_lift(fam, c, w) - t
        if f > 0.0:
            hi = w
        else:
            lo = w
        if f == 0.0:
            return w
        wn = w - f / g_deriv(fam, c, w)
        if abs(wn - w) < NEWTON_TOL:
            # rounding can put a converged step just outside the bracket
            return min(max(wn, lo), hi)
        if wn <= lo or wn >= hi:
            wn = 0.5 * (lo + hi)
        w = wn
    return np.nan


# rotation profiles


@njit(cache=True, nogil=True)
def r_val(code, p1, p2, x):
    if code == ROT_ZERO:
        return 0.0
    if code == ROT_LINEAR:
        return x
    if code == ROT_SMOOTH:
        return x + p1 / TWO_PI * math.sin(TWO_PI * x)
    t = wrap(x - p2) / p1
    if t >= 1.0:
        return 0.0
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


@njit(cache=True, nogil=True)
def r_deriv(code, p1, p2, x):
    if code == ROT_ZERO:
        return 0.0
    if code == ROT_LINEAR:
        return 1.0
    if code == ROT_SMOOTH:
        return 1.0 + p1 * math.cos(TWO_PI * x)
    t = wrap(x - p2) / p1
    if t >= 1.0:
        return 0.0
    return 30.0 * t * t * (1.0 - t) * (1.0 - t) / p1


@njit(cache=True, nogil=True)
def rot(par, x):
    return r_val(int(par[P_ROT]), par[P_R1], par[P_R2], x)


@njit(cache=True, nogil=True)
def rotp(par, x):
    return r_deriv(int(par[P_ROT]), par[P_R1], par[P_R2], x)


@njit(cache=True, nogil=True)
def fib(par, z):
    return g_lift(int(par[P_FAM]), par[P_FPAR], z)


@njit(cache=True, nogil=True)
def fibp(par, z):
    return g_deriv(int(par[P_FAM]), par[P_FPAR], z)


@njit(cache=True, nogil=True)
def fibinv(par, z):
    return g_inverse(int(par[P_FAM]), par[P_FPAR], z)


# the coupled map


@njit(cache=True, nogil=True)
def apply_point(par, x, y, z):
    bx = par[P_M11] * x + par[P_M12] * y
    by = par[P_M21] * x + par[P_M22] * y
    zn = fib(par, wrap(z + rot(par, x)))
    d = par[P_DELTA]
    if d != 0.0:
        zn += d * math.sin(TWO_PI * (x + y))
        if par[P_FEEDBACK] != 0.0:
            bx += d * math.sin(TWO_PI * z)
            by += d * math.cos(TWO_PI * z)
    return wrap(bx), wrap(by), wrap(zn)


@njit(cache=True, nogil=True)
def inverse_point(par, x, y, z):
    xp = wrap(par[P_M22] * x - par[P_M12] * y)
    yp = wrap(-par[P_M21] * x + par[P_M11] * y)
    w = fibinv(par, z)
    return xp, yp, wrap(w - rot(par, xp))


@njit(cache=True, nogil=True)
def jacobian_point(par, x, y, z, out):
    w = wrap(z + rot(par, x))
    gp = fibp(par, w)
    out[0, 0] = par[P_M11]
    out[0, 1] = par[P_M12]
    out[0, 2] = 0.0
    out[1, 0] = par[P_M21]
    out[1, 1] = par[P_M22]
    out[1, 2] = 0.0
    out[2, 0] = gp * rotp(par, x)
    out[2, 1] = 0.0
    out[2, 2] = gp
    d = par[P_DELTA]
    if d != 0.0:
        cxy = TWO_PI * d * math.cos(TWO_PI * (x + y))
        out[2, 0] += cxy
        out[2, 1] += cxy
        if par[P_FEEDBACK] != 0.0:
            out[0, 2] = TWO_PI * d * math.cos(TWO_PI * z)
            out[1, 2] = -TWO_PI * d * math.sin(TWO_PI * z)


# vectorised drivers


@njit(cache=True, nogil=True)
def apply_many(par, pts, steps):
    out = np.empty_like(pts)
    for i in range(pts.shape[0]):
        x, y, z = pts[i, 0], pts[i, 1], pts[i, 2]
        for _ in range(steps):
            x, y, z = apply_point(par, x, y, z)
        out[i, 0] = x
        out[i, 1] = y
        out[i, 2] = z
    return out


@njit(cache=True, nogil=True)
def inverse_many(par, pts, steps):
    out = np.empty_like(pts)
    for i in range(pts.shape[0]):
        x, y, z = pts[i, 0], pts[i, 1], pts[i, 2]
        for _ in range(steps):
            x, y, z = inverse_point(par, x, y, z)
        out[i, 0] = x
        out[i, 1] = y
        out[i, 2] = z
    return out


@njit(cache=True, nogil=True)
def jacobian_many(par, pts):
    out = np.empty((pts.shape[0], 3, 3))
    for i in range(pts.shape[0]):
        jacobian_point(par, pts[i, 0], pts[i, 1], pts[i, 2], out[i])
    return out


@njit(cache=True, nogil=True)
def decompose_many(par, pts):
    n = pts.shape[0]
    f1 = np.empty_like(pts)
    f2 = np.empty_like(pts)
    f3 = np.empty_like(pts)
    for i in range(n):
        x, y, z = pts[i, 0], pts[i, 1], pts[i, 2]
        w = wrap(z + rot(par, x))
        v = wrap(fib(par, w))
        f1[i, 0] = x
        f1[i, 1] = y
        f1[i, 2] = w
        f2[i, 0] = x
        f2[i, 1] = y
        f2[i, 2] = v
        f3[i, 0] = wrap(par[P_M11] * x + par[P_M12] * y)
        f3[i, 1] = wrap(par[P_M21] * x + par[P_M22] * y)
        f3[i, 2] = v
    return f1, f2, f3


@njit(cache=True, nogil=True)
def fiber_vec(fam, c, z, which):
    out = np.empty_like(z)
    for i in range(z.shape[0]):
        if which == 0:
            out[i] = wrap(g_lift(fam, c, z[i]))
        elif which == 1:
            out[i] = g_deriv(fam, c, z[i])
        elif which == 2:
            out[i] = wrap(g_inverse(fam, c, z[i]))
        else:
            out[i] = g_lift(fam, c, z[i])
    return out


@njit(cache=True, nogil=True)
def rotation_vec(code, p1, p2, x, deriv):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        if deriv:
            out[i] = r_deriv(code, p1, p2, x[i])
        else:
            out[i] = r_val(code, p1, p2, x[i])
    return out
