import math

import numpy as np
from numba import njit

from ..torus_systems._kernels import (P_DELTA, P_M11, P_M12, P_M21, P_M22, apply_point, fib,
                                      rot, wrap)

TWO_PI = 2.0 * math.pi
DYADIC_BITS = 40


@njit(cache=True, nogil=True)
def snap(v):
    s = 2.0 ** DYADIC_BITS
    return math.floor(v * s) / s


@njit(cache=True, nogil=True)
def graph_value(par, x, y, depth, z0):
    """Depth-fold graph transform of the constant graph z0 at base point (x, y).

    h(w) = g(h(A^-1 w) + r) + delta sin 2 pi (A^-1 w) evaluated along the
    backward base orbit, which is exact for dyadic (x, y).
    """
    a11, a12, a21, a22 = par[P_M22], -par[P_M12], -par[P_M21], par[P_M11]
    xs = np.empty(depth + 1)
    ys = np.empty(depth + 1)
    xs[0] = x
    ys[0] = y
    for k in range(1, depth + 1):
        xp = a11 * xs[k - 1] + a12 * ys[k - 1]
        yp = a21 * xs[k - 1] + a22 * ys[k - 1]
        xs[k] = xp - math.floor(xp)
        ys[k] = yp - math.floor(yp)
    d = par[P_DELTA]
    z = z0
    for k in range(depth, 0, -1):
        z = wrap(fib(par, wrap(z + rot(par, xs[k]))) + d * math.sin(TWO_PI * (xs[k] + ys[k])))
    return z


@njit(cache=True, nogil=True)
def graph_many(par, pts2, depth, z0):
    out = np.empty(pts2.shape[0])
    for i in range(pts2.shape[0]):
        out[i] = graph_value(par, pts2[i, 0], pts2[i, 1], depth, z0)
    return out


@njit(cache=True, nogil=True)
def _ld(a, b):
    d = b - a
    return d - math.ceil(d - 0.5)


@njit(cache=True, nogil=True)
def line_slope_max(par, starts, dirs, m, depth, z0):
    """max |h(p + (i+1) s v) - h(p + i s v)| / s over lines, s = 2^-m.

    dirs[j] is an integer lattice direction so that every line closes up
    on the torus and stays on the dyadic grid.
    """
    n = 2 ** m
    h = 1.0 / n
    best = 0.0
    for li in range(starts.shape[0]):
        vx, vy = dirs[li, 0], dirs[li, 1]
        step = h / math.sqrt(vx * vx + vy * vy)
        x0, y0 = starts[li, 0], starts[li, 1]
        prev = graph_value(par, x0, y0, depth, z0)
        for i in range(1, n + 1):
            x = wrap(x0 + i * h * vx)
            y = wrap(y0 + i * h * vy)
            v = graph_value(par, x, y, depth, z0)
            s = abs(_ld(prev, v)) / step
            if s > best:
                best = s
            prev = v
    return best


@njit(cache=True, nogil=True)
def secant_probe(par, centers, eps, n_pts, depth, z0, seed):
    """Minimum angle (degrees) between the fiber axis and secants of graph points in eps-balls."""
    np.random.seed(seed)
    best = 90.0
    X = np.empty(n_pts + 1)
    Y = np.empty(n_pts + 1)
    Z = np.empty(n_pts + 1)
    for c in range(centers.shape[0]):
        cx, cy = centers[c, 0], centers[c, 1]
        cz = graph_value(par, cx, cy, depth, z0)
        X[0] = 0.0
        Y[0] = 0.0
        Z[0] = 0.0
        m = 1
        for _ in range(n_pts):
            r = eps * 10.0 ** (-4.0 * np.random.random())
            th = TWO_PI * np.random.random()
            dx = snap(r * math.cos(th))
            dy = snap(r * math.sin(th))
            z = graph_value(par, wrap(cx + dx), wrap(cy + dy), depth, z0)
            dz = _ld(cz, z)
            if math.sqrt(dx * dx + dy * dy + dz * dz) < eps and (dx != 0.0 or dy != 0.0):
                X[m] = dx
                Y[m] = dy
                Z[m] = dz
                m += 1
        for i in range(1, m):
            for j in range(i):
                ax = X[i] - X[j]
                ay = Y[i] - Y[j]
                az = Z[i] - Z[j]
                b = math.sqrt(ax * ax + ay * ay)
                a = math.degrees(math.atan2(b, abs(az)))
                if a < best:
                    best = a
    return best


@njit(cache=True, nogil=True)
def slab_scatter(par, x, y, z, burn_in, n_want, width, du, ds, max_steps):
    """Orbit points with |d . du| < width, d the lifted offset from (0, 0).

    Returns rows (d . ds, z) of at most n_want points found within
    max_steps iterates after burn-in.
    """
    out = np.empty((n_want, 2))
    for _ in range(burn_in):
        x, y, z = apply_point(par, x, y, z)
    m = 0
    for _ in range(max_steps):
        x, y, z = apply_point(par, x, y, z)
        dx = x - math.ceil(x - 0.5)
        dy = y - math.ceil(y - 0.5)
        if abs(dx * du[0] + dy * du[1]) < width:
            out[m, 0] = dx * ds[0] + dy * ds[1]
            out[m, 1] = z
            m += 1
            if m == n_want:
                break
    return out[:m]
