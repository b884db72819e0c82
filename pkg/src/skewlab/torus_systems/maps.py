"""Point-level evaluation of the coupled map and its pieces.

Every function accepts a single point (shape (3,)) or a stack of points
(shape (n, 3)) and returns the same shape.
"""
from __future__ import annotations

import numpy as np

from ..errors import ConvergenceError
from . import _kernels as K
from .spec import AnosovSpec, Eigendata, FiberSpec, RotationSpec, SystemSpec


def wrap(x):
    """Reduce to the torus convention [0, 1)."""
    x = np.asarray(x, dtype=float)
    r = x - np.floor(x)
    return np.where(r >= 1.0, 0.0, r)


def lift_delta(a, b):
    """Signed torus displacement from a to b, in (-1/2, 1/2]."""
    d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    return d - np.ceil(d - 0.5)


def torus_distance(p, q):
    """Max-coordinate torus distance between points."""
    return np.max(np.abs(lift_delta(p, q)), axis=-1)


def _as_points(p):
    a = np.ascontiguousarray(p, dtype=float)
    single = a.ndim == 1
    return (a.reshape(1, 3) if single else a), single


def _out(a, single):
    return a[0] if single else a


def coupled_apply(sys: SystemSpec, p, steps: int = 1):
    pts, single = _as_points(p)
    return _out(K.apply_many(sys.params, pts, int(steps)), single)


def coupled_inverse(sys: SystemSpec, p, steps: int = 1):
    if sys.delta > 0.0:
        raise NotImplementedError("the inverse is only available for the exact skew product (delta = 0)")
    pts, single = _as_points(p)
    out = K.inverse_many(sys.params, pts, int(steps))
    if np.isnan(out).any():
        raise ConvergenceError("fiber inverse did not converge")
    return _out(out, single)


def coupled_jacobian(sys: SystemSpec, p):
    pts, single = _as_points(p)
    return _out(K.jacobian_many(sys.params, pts), single)


def decompose_apply(sys: SystemSpec, p):
    """(f1(p), f2 f1(p), f3 f2 f1(p)) for F = f3 o f2 o f1.

    f1 rotates the fiber by r(x), f2 applies g, f3 applies A on the base.
    """
    if sys.delta > 0.0:
        raise ValueError("decomposition is defined for the exact skew product only")
    pts, single = _as_points(p)
    f1, f2, f3 = K.decompose_many(sys.params, pts)
    return _out(f1, single), _out(f2, single), _out(f3, single)


def eigendata(a: AnosovSpec) -> Eigendata:
    return a.eigen


def _fib(fib: FiberSpec, z, which):
    z = np.asarray(z, dtype=float)
    out = K.fiber_vec(fib.code, fib.param, np.ascontiguousarray(z.ravel()), which)
    return out.reshape(z.shape) if z.ndim else float(out[0])


def fiber_eval(fib: FiberSpec, z):
    return _fib(fib, z, 0)


def fiber_lift(fib: FiberSpec, z):
    """g on the lift R -> R (g(z + 1) = g(z) + 1)."""
    return _fib(fib, z, 3)


def fiber_deriv(fib: FiberSpec, z):
    return _fib(fib, z, 1)


def fiber_inverse(fib: FiberSpec, z):
    out = _fib(fib, z, 2)
    if np.isnan(out).any():
        raise ConvergenceError("fiber inverse did not converge")
    return out


def _rot(rot: RotationSpec, x, deriv):
    x = np.asarray(x, dtype=float)
    p1 = rot.s if rot.variant == "smooth" else rot.epsilon
    out = K.rotation_vec(rot.code, p1, rot.x0, np.ascontiguousarray(x.ravel()), deriv)
    return out.reshape(x.shape) if x.ndim else float(out[0])


def rotation_eval(rot: RotationSpec, x):
    """r(x), returned in [0, 1] (r(x0 + eps) = 1 = 0 on the circle)."""
    return _rot(rot, x, False)


def rotation_deriv(rot: RotationSpec, x):
    return _rot(rot, x, True)


def random_points(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.random((n, 3))
