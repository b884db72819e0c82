import math

import numpy as np
from numba import njit

from .torus_systems._kernels import apply_point, fibp, rot, wrap

OBS_ONE = 0
OBS_COS_X = 1
OBS_SIN_X = 2
OBS_COS_Y = 3
OBS_SIN_Y = 4
OBS_COS_Z = 5
OBS_SIN_Z = 6
OBS_COS_X_COS_Z = 7
OBS_SIN_XY_COS_Z = 8
OBS_IND_Z = 9      # 1 if the torus distance of z to a is < b
OBS_OUT_Z = 10     # complement of OBS_IND_Z

TWO_PI = 2.0 * math.pi


@njit(cache=True, nogil=True)
def obs_value(code, a, b, x, y, z):
    if code == OBS_ONE:
        return 1.0
    if code == OBS_COS_X:
        return math.cos(TWO_PI * x)
    if code == OBS_SIN_X:
        return math.sin(TWO_PI * x)
    if code == OBS_COS_Y:
        return math.cos(TWO_PI * y)
    if code == OBS_SIN_Y:
        return math.sin(TWO_PI * y)
    if code == OBS_COS_Z:
        return math.cos(TWO_PI * z)
    if code == OBS_SIN_Z:
        return math.sin(TWO_PI * z)
    if code == OBS_COS_X_COS_Z:
        return math.cos(TWO_PI * x) * math.cos(TWO_PI * z)
    if code == OBS_SIN_XY_COS_Z:
        return math.sin(TWO_PI * (x + y)) * math.cos(TWO_PI * z)
    d = z - a
    d = abs(d - math.ceil(d - 0.5))
    inside = 1.0 if d < b else 0.0
    if code == OBS_IND_Z:
        return inside
    return 1.0 - inside


@njit(cache=True, nogil=True)
def obs_many(codes, oparams, pts):
    out = np.empty((pts.shape[0], codes.shape[0]))
    for i in range(pts.shape[0]):
        for j in range(codes.shape[0]):
            out[i, j] = obs_value(codes[j], oparams[j, 0], oparams[j, 1],
                                  pts[i, 0], pts[i, 1], pts[i, 2])
    return out


@njit(cache=True, nogil=True)
def birkhoff(par, x, y, z, codes, oparams, n, burn_in, n_batches):
    """Batch sums of observables along one orbit after burn-in."""
    m = codes.shape[0]
    batch = n // n_batches
    sums = np.zeros((n_batches, m))
    total = np.zeros(m)
    for _ in range(burn_in):
        x, y, z = apply_point(par, x, y, z)
    for it in range(n):
        k = it // batch
        for j in range(m):
            v = obs_value(codes[j], oparams[j, 0], oparams[j, 1], x, y, z)
            total[j] += v
            if k < n_batches:
                sums[k, j] += v
        x, y, z = apply_point(par, x, y, z)
    return total / n, sums / batch


@njit(cache=True, nogil=True)
def _bin(v, n):
    k = int(v * n)
    return n - 1 if k >= n else k


@njit(cache=True, nogil=True)
def accumulate(counts, pts):
    nx, ny, nz = counts.shape
    for i in range(pts.shape[0]):
        counts[_bin(pts[i, 0], nx), _bin(pts[i, 1], ny), _bin(pts[i, 2], nz)] += 1


@njit(cache=True, nogil=True)
def cloud_run(par, pts, n, burn_in, counts, codes, oparams, moments, central):
    """Advance a point cloud n steps, binning and summing observables for i >= burn_in.

    `moments[j]` accumulates per-step cloud sums (summed over points first,
    then over time); `central` receives sum log g' over the recorded steps.
    """
    m = codes.shape[0]
    step = np.zeros(m)
    for it in range(n):
        rec = it >= burn_in
        if rec:
            accumulate(counts, pts)
            for j in range(m):
                step[j] = 0.0
        for i in range(pts.shape[0]):
            x, y, z = pts[i, 0], pts[i, 1], pts[i, 2]
            if rec:
                for j in range(m):
                    step[j] += obs_value(codes[j], oparams[j, 0], oparams[j, 1], x, y, z)
                central[i] += math.log(fibp(par, wrap(z + rot(par, x))))
            x, y, z = apply_point(par, x, y, z)
            pts[i, 0], pts[i, 1], pts[i, 2] = x, y, z
        if rec:
            for j in range(m):
                moments[j] += step[j]
