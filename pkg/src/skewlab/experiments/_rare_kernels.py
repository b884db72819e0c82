import numpy as np
from numba import njit

from ..torus_systems._kernels import P_M11, P_M12, P_M21, P_M22, P_R1, P_R2, wrap


@njit(cache=True, nogil=True)
def survivor_counts(par, grid, n_max):
    """counts[n-1] = number of grid points whose orbit points 0..n-1 avoid I_eps.

    Grid points ((2i+1)/2g, (2j+1)/2g) are dyadic, so base orbits are exact.
    On T^2 x {z_r} the fiber stays at z_r while the strip is avoided
    (r = 0 there), so only the base orbit matters.
    """
    eps, x0 = par[P_R1], par[P_R2]
    counts = np.zeros(n_max, dtype=np.int64)
    for i in range(grid):
        for j in range(grid):
            x = (2 * i + 1) / (2.0 * grid)
            y = (2 * j + 1) / (2.0 * grid)
            for k in range(n_max):
                if wrap(x - x0) < eps:
                    break
                counts[k] += 1
                bx = par[P_M11] * x + par[P_M12] * y
                by = par[P_M21] * x + par[P_M22] * y
                x = bx - np.floor(bx)
                y = by - np.floor(by)
    return counts
