"""Unstable curves of the exact skew product, their reference densities and
the contracting-centre quadratures built on them.

A curve is stored as a graph over the unstable line of the base.  Its
seed is the image under F^depth of a short straight segment

    S = {B_{-depth} + alpha_u^-depth t du} x {z_{-depth}},

taken deep in the backward orbit of the seed point, so every node is an
exact composition of the map and graph-transform convergence makes the
curve tangent to E^u to machine precision.  After `steps` further
iterates, the node with parameter t has base point B_steps + alpha_u^steps t du
where B_k is the (dyadic, hence round-off free) orbit of the seed centre.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import _curve_kernels as CK
from .cocycle import dyadic
from .errors import AssumptionError, ConvergenceError, NodeCapError
from .torus_systems import SystemSpec, check_assumptions_A
from .torus_systems.maps import (coupled_inverse, fiber_deriv, lift_delta,
                                 rotation_eval, wrap)

DEFAULT_NODE_CAP = 4_000_000


def _require_skew(sys: SystemSpec):
    if sys.delta > 0.0:
        raise ValueError("unstable curves are grown for the exact skew product (delta = 0)")


def _slope_bound(sys: SystemSpec) -> float:
    """Cone aperture a, or its formula value when the cone degenerates."""
    e, fib, rot = sys.eigen, sys.fiber, sys.rotation
    if fib.lam_max >= e.alpha_u:
        raise AssumptionError(
            f"lam_max={fib.lam_max:.4g} >= alpha_u={e.alpha_u:.4g}: unstable leaves are not attracting")
    return 2.0 * fib.lam_max * rot.c_hi / (e.alpha_u - fib.lam_max)


def base_orbit(sys: SystemSpec, b0, k_lo: int, k_hi: int) -> np.ndarray:
    """Rows A^k b0 mod 1 for k = k_lo..k_hi; exact when b0 is dyadic."""
    m = sys.anosov.matrix.astype(float)
    mi = sys.anosov.inverse_matrix.astype(float)
    out = np.empty((k_hi - k_lo + 1, 2))
    x, y = float(b0[0]), float(b0[1])
    fwd = [(x, y)]
    for _ in range(max(k_hi, 0)):
        x, y = (m[0, 0] * x + m[0, 1] * y) % 1.0, (m[1, 0] * x + m[1, 1] * y) % 1.0
        fwd.append((x, y))
    x, y = float(b0[0]), float(b0[1])
    bwd = [(x, y)]
    for _ in range(max(-k_lo, 0)):
        x, y = (mi[0, 0] * x + mi[0, 1] * y) % 1.0, (mi[1, 0] * x + mi[1, 1] * y) % 1.0
        bwd.append((x, y))
    for i, k in enumerate(range(k_lo, k_hi + 1)):
        out[i] = fwd[k] if k >= 0 else bwd[-k]
    return out


def _spacing(u, z):
    return np.hypot(np.diff(u), lift_delta(z[:-1], z[1:]))


@dataclass
class UnstableCurve:
    """A W^u segment after `steps` iterates of its seed.

    `t` is the seed parameter (base arclength along du at step 0); node i
    has base arclength coordinate u_i = alpha_u^steps t_i relative to the
    backbone point B_steps.  `length` is the base-projection arclength.
    """

    sys: SystemSpec
    origin: np.ndarray
    z_deep: float
    depth: int
    steps: int
    t: np.ndarray
    points: np.ndarray
    lifted_z: np.ndarray
    h_max: float
    node_cap: int = DEFAULT_NODE_CAP
    slope_bound: float = field(default=0.0, repr=False)

    def __len__(self):
        return len(self.t)

    @property
    def au(self) -> float:
        return self.sys.eigen.alpha_u

    @property
    def u(self) -> np.ndarray:
        return self.t * self.au ** self.steps

    @property
    def length(self) -> float:
        return float((self.t[-1] - self.t[0]) * self.au ** self.steps)

    @property
    def arclength(self) -> float:
        return float(_spacing(self.u, self.points[:, 2]).sum())

    @property
    def spacing(self) -> np.ndarray:
        return _spacing(self.u, self.points[:, 2])

    @property
    def z_span(self) -> float:
        return float(self.lifted_z[-1] - self.lifted_z[0])

    def backbone(self, k_lo: int, k_hi: int) -> np.ndarray:
        return base_orbit(self.sys, self.origin, k_lo, k_hi)

    def evaluate(self, t, steps: int | None = None) -> np.ndarray:
        """Points with seed parameters t after `steps` iterates (default: current)."""
        steps = self.steps if steps is None else int(steps)
        if steps < 0:
            raise ValueError("steps must be nonnegative")
        t = np.ascontiguousarray(np.atleast_1d(t), dtype=float)
        bb = np.ascontiguousarray(self.backbone(-self.depth, steps))
        scale = self.au ** -self.depth
        z0 = np.full(len(t), self.z_deep)
        return CK.evaluate(self.sys.params, bb, np.asarray(self.sys.eigen.du), t * scale,
                           z0, self.depth + steps)

    def lifted_at(self, t, i: int) -> float:
        """Lifted fiber coordinate at parameter t, continued from node i."""
        z = self.evaluate(np.array([t]))[0, 2]
        return float(self.lifted_z[i] + lift_delta(self.points[i, 2], z))

    def resampled(self, t, steps: int | None = None) -> "UnstableCurve":
        """Same leaf, new parameter nodes, possibly another iterate."""
        steps = self.steps if steps is None else int(steps)
        t = np.ascontiguousarray(t, dtype=float)
        pts = self.evaluate(t, steps)
        return UnstableCurve(self.sys, self.origin, self.z_deep, self.depth, steps, t, pts,
                             CK.lifted(pts[:, 2], pts[0, 2]), self.h_max, self.node_cap,
                             self.slope_bound)

    def tangent_slopes(self) -> np.ndarray:
        """Finite-difference slopes dz/du between consecutive nodes."""
        return lift_delta(self.points[:-1, 2], self.points[1:, 2]) / np.diff(self.u)

    def to_csv(self, path, profile: "DensityProfile | None" = None):
        write_curve_csv(self, path, profile)


def seed_unstable_segment(sys: SystemSpec, p, length: float, h_max: float = 1e-3,
                          node_cap: int = DEFAULT_NODE_CAP, depth: int | None = None) -> UnstableCurve:
    """W^u segment of base-projection length `length` centred at p.

    The base of p is snapped to the 2^-40 grid (displacement < 1e-12).
    `depth` defaults to the smallest pull-back depth whose graph transform
    error a L (lam_max / alpha_u)^depth is below 1e-17.
    """
    _require_skew(sys)
    if not 0.0 < length < 1.0:
        raise ValueError("length must be in (0, 1)")
    a = _slope_bound(sys)
    ratio = sys.fiber.lam_max / sys.eigen.alpha_u
    if depth is None:
        need = math.log(1e-17 / (max(a, 1e-3) * length)) / math.log(ratio)
        depth = int(min(max(math.ceil(need), 4), 200))
    p = dyadic(wrap(np.asarray(p, dtype=float)))
    deep = coupled_inverse(sys, p, depth)
    curve = UnstableCurve(sys, p[:2].copy(), float(deep[2]), int(depth), 0,
                          np.array([-0.5 * length, 0.5 * length]), np.empty((0, 3)),
                          np.empty(0), float(h_max), int(node_cap), a)
    return _refine(curve, curve.t, 0)


def _refine(curve: UnstableCurve, t, steps: int) -> UnstableCurve:
    """Re-evaluate at `steps` and subdivide until node spacing <= h_max."""
    h = curve.h_max
    au_s = curve.au ** steps
    # a priori count: spacing <= base spacing * sqrt(1 + a^2)
    base = np.diff(t) * au_s
    k = np.maximum(np.ceil(base * math.sqrt(1.0 + curve.slope_bound ** 2) / h), 1).astype(np.int64)
    total = int(k.sum()) + 1
    if total > curve.node_cap:
        raise NodeCapError(f"refinement needs {total} nodes, cap is {curve.node_cap}")
    if np.any(k > 1):
        idx = np.repeat(np.arange(len(k)), k)
        start = np.cumsum(k) - k
        frac = (np.arange(total - 1) - start[idx]) / k[idx]
        t = np.append(t[idx] + frac * np.diff(t)[idx], t[-1])
    pts = curve.evaluate(t, steps)
    while True:
        u = t * au_s
        bad = np.nonzero(_spacing(u, pts[:, 2]) > h)[0]
        if len(bad) == 0:
            break
        if len(t) + len(bad) > curve.node_cap:
            raise NodeCapError(f"refinement needs {len(t) + len(bad)} nodes, cap is {curve.node_cap}")
        mid = 0.5 * (t[bad] + t[bad + 1])
        t = np.insert(t, bad + 1, mid)
        pts = np.insert(pts, bad + 1, curve.evaluate(mid, steps), axis=0)
    return UnstableCurve(curve.sys, curve.origin, curve.z_deep, curve.depth, steps, t, pts,
                         CK.lifted(pts[:, 2], pts[0, 2]), curve.h_max, curve.node_cap,
                         curve.slope_bound)


def evolve_and_refine(sys: SystemSpec, curve: UnstableCurve, steps: int = 1,
                      refine: bool = True, h_max: float | None = None) -> UnstableCurve:
    """F^steps of the curve, subdivided so that node spacing <= h_max.

    New nodes are evaluated on the leaf itself (from the seed), so
    refinement introduces no interpolation error.
    """
    _require_skew(sys)
    if sys != curve.sys:
        raise ValueError("curve belongs to a different system")
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    if h_max is not None:
        curve = UnstableCurve(**{**curve.__dict__, "h_max": float(h_max)})
    target = curve.steps + int(steps)
    if not refine:
        return curve.resampled(curve.t, target)
    return _refine(curve, curve.t, target)


# reference density

@dataclass
class DensityProfile:
    """Reference density of mu_W at the nodes of a curve.

    `rho` is the density with respect to arclength; `weights` are the
    trapezoid weights (in base arclength u, with Jacobian sqrt(1 + s^2))
    for integrating against mu_W, summing to 1.
    """

    rho: np.ndarray
    slopes: np.ndarray
    weights: np.ndarray
    normalization: float
    depth_used: np.ndarray
    arclength: np.ndarray

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    @property
    def max_ratio(self) -> float:
        return float(self.rho.max() / self.rho.min())


def _trapezoid_weights(u):
    w = np.zeros(len(u))
    du = np.diff(u)
    w[:-1] += 0.5 * du
    w[1:] += 0.5 * du
    return w


def rho_density(sys: SystemSpec, curve: UnstableCurve, n_trunc: int = 40, tol: float = 1e-12,
                n_back: int = 40, ref: int | None = None) -> DensityProfile:
    """Reference density from truncated backward products of unstable Jacobians.

    rho(q_j) / rho(q_ref) = prod_k J^u(F^-k q_ref) / J^u(F^-k q_j); the
    product stops at n_trunc or when |log factor| < tol.  E^u slopes at
    depth n_trunc are converged by a further n_back backward steps.
    """
    _require_skew(sys)
    if len(curve) < 2:
        raise ValueError("a density needs at least two nodes")
    ref = len(curve) // 2 if ref is None else int(ref)
    back = np.ascontiguousarray(curve.backbone(curve.steps - n_trunc - n_back, curve.steps)[::-1])
    u = np.ascontiguousarray(curve.u)
    z = np.ascontiguousarray(curve.points[:, 2])
    logrho, slope, used, ok = CK.density_sweep(sys.params, back, np.asarray(sys.eigen.du), u, z,
                                               ref, int(n_trunc), int(n_back), float(tol))
    if not ok:
        raise ConvergenceError("fiber inverse failed on a backward orbit")
    jac = np.sqrt(1.0 + slope * slope)
    tw = _trapezoid_weights(u)
    rho = np.exp(logrho)
    total = float(np.dot(tw, rho * jac))
    w = tw * rho * jac / total
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (jac[1:] + jac[:-1]) * np.diff(u))])
    return DensityProfile(rho / total, slope, w, 1.0 / total, used, arc)


def distortion_bound(profile: DensityProfile, ell: float) -> float:
    """K = max rho(q) / rho(q') over node pairs within arclength ell."""
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    return float(CK.window_ratio(profile.arclength, profile.rho, float(ell)))


# fundamental domains

@dataclass(frozen=True)
class FundamentalDomain:
    """Sub-arc of a curve whose lifted fiber coordinate runs from k to k + 1.

    Endpoints are exact crossings of the anchor (z_a), located by root
    finding in the parameter; nodes i_lo..i_hi (inclusive) lie inside.
    """

    curve: UnstableCurve = field(repr=False)
    i_lo: int
    i_hi: int
    t_lo: float
    t_hi: float
    k: int

    @property
    def span(self) -> float:
        a = self.curve.lifted_at(self.t_lo, max(self.i_lo - 1, 0))
        b = self.curve.lifted_at(self.t_hi, self.i_hi)
        return b - a


def _crossing(curve, i, level):
    """Parameter in [t_i, t_{i+1}] where the lifted fiber coordinate equals level."""
    z_i, l_i = curve.points[i, 2], curve.lifted_z[i]
    if curve.lifted_z[i] == level:
        return float(curve.t[i])

    def f(t):
        z = curve.evaluate(np.array([t]))[0, 2]
        return l_i + float(lift_delta(z_i, z)) - level

    return float(brentq(f, curve.t[i], curve.t[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))


def fundamental_domains(curve: UnstableCurve) -> list[FundamentalDomain]:
    """Maximal consecutive sub-arcs spanning the fiber once, cut at z = z_a."""
    za = curve.sys.fiber.z_a
    lz = curve.lifted_z - za
    k0, k1 = math.ceil(lz[0]), math.floor(lz[-1])
    if k1 - k0 < 1:
        return []
    levels = np.arange(k0, k1 + 1)
    # node index i with lz[i] <= level < lz[i+1]
    idx = np.searchsorted(lz, levels, side="right") - 1
    idx = np.clip(idx, 0, len(lz) - 2)
    cuts = [_crossing(curve, int(i), float(lev + za)) for i, lev in zip(idx, levels)]
    out = []
    for j in range(len(levels) - 1):
        out.append(FundamentalDomain(curve, int(idx[j]) + 1, int(idx[j + 1]), cuts[j], cuts[j + 1],
                                     int(levels[j])))
    return out


def cc_integral(sys: SystemSpec, domain: FundamentalDomain, n_nodes: int = 4096,
                uniform: bool = False, n_trunc: int = 40, tol: float = 1e-12,
                return_profile: bool = False):
    """Mean of log g'(z + r(x)) over F^-1 V against its reference measure.

    With `uniform=True` the weights are uniform in the lifted variable
    w = z + r(x) instead, so the value is the full-circle integral of log g'
    (a closed-form check of the quadrature).
    """
    _require_skew(sys)
    curve = domain.curve
    if curve.steps < 1:
        raise ValueError("the domain's curve must have been iterated at least once")
    t = np.linspace(domain.t_lo, domain.t_hi, int(n_nodes) + 1)
    pre = curve.resampled(t, curve.steps - 1)
    x, z = pre.points[:, 0], pre.points[:, 2]
    w = wrap(z + rotation_eval(sys.rotation, x))
    f = np.log(fiber_deriv(sys.fiber, w))
    if uniform:
        wl = CK.lifted(w, w[0])
        val = float(np.dot(_trapezoid_weights(wl), f) / (wl[-1] - wl[0]))
        return (val, None) if return_profile else val
    prof = rho_density(sys, pre, n_trunc, tol)
    val = prof.integrate(f)
    return (val, prof) if return_profile else val


def _unit_level_roots(fib):
    """z* in (0, 1/2) with g'(z*) = 1; g' increases on [0, 1/2] for both families."""
    return brentq(lambda z: float(fiber_deriv(fib, z)) - 1.0, 1e-12, 0.5 - 1e-12, xtol=1e-15)


def cc_sufficient_terms(sys: SystemSpec) -> dict:
    """Pieces of the sufficient contracting-centre inequality (K_A = 1 for linear A)."""
    rep = check_assumptions_A(sys)
    if not rep.passed:
        raise AssumptionError(f"standing assumptions fail: {', '.join(rep.failures())}", rep)
    e, fib, rot = sys.eigen, sys.fiber, sys.rotation
    zs = _unit_level_roots(fib)

    def lg(z):
        return math.log(float(fiber_deriv(fib, z)))

    opts = dict(epsabs=1e-14, epsrel=1e-13, limit=200)
    p_plus = quad(lg, zs, 1.0 - zs, points=[0.5], **opts)[0]
    p_minus = quad(lg, 0.0, zs, **opts)[0] + quad(lg, 1.0 - zs, 1.0, **opts)[0]
    k_a = 1.0
    bracket = rot.c_hi * k_a ** 2 / (rot.c_lo * e.beta) * (1.0 + 2.0 * fib.lam_max / (e.alpha_u - fib.lam_max))
    return {"z_star": zs, "int_plus": p_plus, "int_minus": p_minus, "bracket": bracket,
            "K_A": k_a, "lhs": bracket * p_plus + p_minus}


def cc_sufficient_lhs(sys: SystemSpec) -> float:
    """Left side of the sufficient condition; negative implies the CC-condition."""
    return float(cc_sufficient_terms(sys)["lhs"])


def write_curve_csv(curve: UnstableCurve, path, profile: DensityProfile | None = None):
    """Columns param, x, y, z, lifted_z, rho (rho empty when no profile is given)."""
    rho = profile.rho if profile is not None else None
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["param", "x", "y", "z", "lifted_z", "rho"])
        for i in range(len(curve)):
            p = curve.points[i]
            wr.writerow([repr(float(curve.t[i])), repr(float(p[0])), repr(float(p[1])),
                         repr(float(p[2])), repr(float(curve.lifted_z[i])),
                         "" if rho is None else repr(float(rho[i]))])
