"""Circle-map diagnostics for the fiber over the fixed point (0, 0) of A."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .maps import fiber_deriv, fiber_lift, rotation_eval, wrap
from .spec import SystemSpec


@dataclass(frozen=True)
class CircleMap:
    """An orientation preserving circle map given by its lift.

    `lift(z + 1) = lift(z) + 1` is assumed; both callables are vectorised.
    """

    lift: Callable
    deriv: Callable
    label: str = ""

    def iterate(self, z, n):
        z = np.asarray(z, dtype=float)
        for _ in range(n):
            z = self.lift(z)
        return z


def fixed_fiber_map(sys: SystemSpec) -> CircleMap:
    """z -> g(z + r(0)), the restriction of the map to the fiber over (0, 0)."""
    if sys.delta > 0.0 and sys.feedback:
        raise ValueError("the fiber over (0, 0) is not invariant when base feedback is on")
    shift = float(rotation_eval(sys.rotation, 0.0))
    fib = sys.fiber

    # sin 2 pi (x + y) vanishes on this fiber, so delta drops out
    def lift(z):
        return fiber_lift(fib, np.asarray(z, dtype=float) + shift)

    def deriv(z):
        return fiber_deriv(fib, wrap(np.asarray(z, dtype=float) + shift))

    return CircleMap(lift, deriv, f"g(z + {shift:.6g})")


def rigid_rotation(alpha: float) -> CircleMap:
    return CircleMap(lambda z: np.asarray(z, dtype=float) + alpha,
                     lambda z: np.ones_like(np.asarray(z, dtype=float)), f"z + {alpha}")


def rotation_number(cmap: CircleMap, n: int, z0: float = 0.0) -> float:
    """Average lift displacement over n iterates, reduced to [0, 1)."""
    z = np.float64(z0)
    for _ in range(int(n)):
        z = cmap.lift(z)
    return float(wrap((z - z0) / n))


@dataclass(frozen=True)
class OrbitCount:
    count: int
    period: int | None
    rotation_number: float
    lower_bound: bool
    attracting_points: tuple = ()
    neutral: bool = False

    def to_dict(self):
        return {"count": self.count, "period": self.period,
                "rotation_number": self.rotation_number, "lower_bound": self.lower_bound,
                "attracting_points": list(self.attracting_points), "neutral": self.neutral}


def _orbit_multiplier(cmap, z, q):
    m = 1.0
    for _ in range(q):
        m *= float(cmap.deriv(z))
        z = cmap.lift(z)
    return m


def count_attracting_orbits(cmap: CircleMap, max_period: int = 20, n_grid: int = 4000,
                            n_rot: int = 10_000) -> OrbitCount:
    """Number of attracting periodic orbits, searched up to `max_period`.

    Periodic points of period q with lift displacement p are the zeros of
    D(z) = lift^q(z) - z - p; they are bracketed by sign changes of D on a
    periodic grid and classified by the multiplier of the orbit.
    """
    rho = rotation_number(cmap, n_rot)
    zg = (np.arange(n_grid) + 0.5) / n_grid
    for q in range(1, max_period + 1):
        fq = cmap.iterate(zg, q)
        for p in sorted({int(np.floor(q * rho)), int(np.ceil(q * rho)), int(round(q * rho))}):
            d = fq - zg - p
            if np.all(d == 0.0):
                return OrbitCount(0, q, p / q, False, (), True)
            ext = np.append(d, d[0])
            idx = np.nonzero(np.sign(ext[:-1]) * np.sign(ext[1:]) < 0)[0]
            if len(idx) == 0:
                continue

            def D(z):
                return float(cmap.iterate(z, q)) - z - p

            roots = []
            for i in idx:
                a = zg[i]
                b = zg[i + 1] if i + 1 < n_grid else zg[0] + 1.0
                roots.append(float(wrap(brentq(D, a, b, xtol=1e-14))))
            attracting = sorted(z for z in roots if _orbit_multiplier(cmap, z, q) < 1.0)
            return OrbitCount(len(attracting) // q, q, p / q, False, tuple(attracting))
    return OrbitCount(0, None, rho, True)
