"""Tangent dynamics: invariant cones, E^u, Lyapunov spectra, central exponents.

Vectors in E^cu are written in the constant orthonormal frame
{d_u, d_z}, d_u = (du, 0).  In that frame

    DF_p = [[alpha_u, 0], [d_u h, d_z h]],   h(x, y, z) = g(z + r(x)),

with d_u h = g'(z + r(x)) r'(x) du_x and d_z h = g'(z + r(x)).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import _cocycle_kernels as CK
from .errors import AssumptionError, ConvergenceError
from .torus_systems import SystemSpec, check_assumptions_A, maps
from .torus_systems.maps import wrap

# a fixed generic orthonormal start frame for QR runs
_Q0 = np.linalg.qr(np.array([[0.9, 0.3, 0.2], [-0.2, 0.8, 0.4], [0.3, -0.35, 0.85]]))[0]


@dataclass
class ConeParams:
    a: float
    b: float
    sigma_observed: float = 0.0

    def contains(self, slope, tol=0.0):
        return (slope >= self.b * (1 - tol)) & (slope <= self.a * (1 + tol))


@dataclass(frozen=True)
class CUVector:
    vu: float
    vz: float

    def in_cone(self, s: float, t: float) -> bool:
        return self.vu >= 0 and self.vz >= 0 and s * self.vu <= self.vz <= t * self.vu

    @property
    def slope(self) -> float:
        return self.vz / self.vu

    def to_ambient(self, sys: SystemSpec) -> np.ndarray:
        du = sys.eigen.du
        return np.array([self.vu * du[0], self.vu * du[1], self.vz])

    @classmethod
    def from_ambient(cls, sys: SystemSpec, v) -> "CUVector":
        du = np.asarray(sys.eigen.du)
        return cls(float(np.dot(v[:2], du)), float(v[2]))


def require_assumptions_A(sys: SystemSpec):
    rep = check_assumptions_A(sys)
    if not rep.passed:
        raise AssumptionError(f"standing assumptions fail: {', '.join(rep.failures())}", rep)
    return rep


def cone_params(sys: SystemSpec) -> ConeParams:
    """a = 2 lam_max C / (alpha_u - lam_max),  b = lam_min c beta / alpha_u."""
    require_assumptions_A(sys)
    e = sys.eigen
    fib, rot = sys.fiber, sys.rotation
    a = 2.0 * fib.lam_max * rot.c_hi / (e.alpha_u - fib.lam_max)
    b = fib.lam_min * rot.c_lo * e.beta / e.alpha_u
    if not 0.0 < b < a:
        raise AssumptionError(f"degenerate cone: b={b}, a={a}")
    return ConeParams(a, b)


def _push_arrays(sys, pts, s):
    pts = np.atleast_2d(pts)
    x, z = pts[:, 0], pts[:, 2]
    w = wrap(z + maps.rotation_eval(sys.rotation, x))
    gp = maps.fiber_deriv(sys.fiber, w)
    duh = gp * maps.rotation_deriv(sys.rotation, x) * sys.eigen.du[0]
    return duh, gp


def push_cu_vector(sys: SystemSpec, p, v: CUVector) -> CUVector:
    """DF_p v expressed in the frame at F(p)."""
    if sys.delta > 0.0:
        raise ValueError("the E^cu frame push is defined for delta = 0")
    duh, gp = _push_arrays(sys, np.asarray(p, dtype=float), None)
    return CUVector(sys.eigen.alpha_u * v.vu, float(duh[0]) * v.vu + float(gp[0]) * v.vz)


def image_slopes(sys: SystemSpec, pts, slopes):
    """Vectorised slope map s -> (d_u h + g' s) / alpha_u."""
    duh, gp = _push_arrays(sys, pts, slopes)
    return (duh + gp * np.asarray(slopes)) / sys.eigen.alpha_u


@dataclass
class ConeReport:
    samples: int
    violations: int
    sigma_observed: float
    a: float
    b: float
    min_image_slope: float
    max_image_slope: float

    @property
    def passed(self):
        return self.violations == 0 and self.sigma_observed > 0.0

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d


def verify_cone(sys: SystemSpec, samples: int, rng: np.random.Generator | int = 0,
                cone: ConeParams | None = None) -> ConeReport:
    """Sample (p, boundary vector) pairs and test DF_p C_{0,a} within C_{b,a}.

    Boundary vectors alternate between (1, 0) and (1, a).  Passing an
    explicit `cone` lets one test a system against another system's cone.
    """
    if cone is None:
        cone = cone_params(sys)
    rng = np.random.default_rng(rng)
    pts = rng.random((samples, 3))
    t = np.where(np.arange(samples) % 2 == 0, 0.0, cone.a)
    img = image_slopes(sys, pts, t)
    viol = int(np.count_nonzero((img < cone.b) | (img > cone.a)))
    sigma = float(np.min(cone.a - img))
    cone.sigma_observed = max(sigma, 0.0)
    return ConeReport(samples, viol, sigma, cone.a, cone.b, float(img.min()), float(img.max()))


def cone_growth_constant(sys: SystemSpec, samples: int = 1000, n_max: int = 30,
                         rng: np.random.Generator | int = 0) -> float:
    """Empirical c0: min over samples and n <= n_max of |DF^n v| / (alpha_u^n |v|)."""
    cone = cone_params(sys)
    rng = np.random.default_rng(rng)
    pts = rng.random((samples, 3))
    t0 = rng.random(samples) * cone.a
    return float(CK.growth_ratios(sys.params, pts, t0, int(n_max)).min())


def unstable_slopes(sys: SystemSpec, pts, n_back: int = 40, tol: float = 1e-10,
                    cap: int = 1280, extra: int = 5) -> np.ndarray:
    """E^u slope (vz / vu in the frame) at each point."""
    if sys.delta > 0.0:
        raise ValueError("E^u by backward iteration needs the exact skew product")
    pts = np.ascontiguousarray(np.atleast_2d(pts), dtype=float)
    s = np.empty(len(pts))
    inc = np.empty(len(pts))
    todo = np.arange(len(pts))
    nb = int(n_back)
    while True:
        sub = np.ascontiguousarray(pts[todo])
        ss, ii = np.empty(len(sub)), np.empty(len(sub))
        if not CK.eu_slopes(sys.params, sub, nb, extra, ss, ii):
            raise ConvergenceError("fiber inverse failed on a backward orbit")
        s[todo], inc[todo] = ss, ii
        todo = todo[ii >= tol]
        if len(todo) == 0:
            return s
        if nb >= cap:
            raise ConvergenceError(
                f"E^u Cauchy increment {inc[todo].max():.3g} above {tol} at n_back={nb}")
        nb = min(2 * nb, cap)


def unstable_direction(sys: SystemSpec, p, n_back: int = 40, tol: float = 1e-10,
                       cap: int = 1280) -> np.ndarray:
    """Unit vector spanning E^u(p); shape (3,) or (n, 3)."""
    single = np.ndim(p) == 1
    s = unstable_slopes(sys, p, n_back, tol, cap)
    du = sys.eigen.du
    v = np.stack([np.full_like(s, du[0]), np.full_like(s, du[1]), s], -1)
    v /= np.sqrt(1.0 + s * s)[:, None]
    return v[0] if single else v


@dataclass
class LyapunovEstimate:
    exponents: np.ndarray
    stderr: np.ndarray
    n: int
    batch_means: np.ndarray = field(repr=False, default=None)

    def to_dict(self):
        return {"exponents": [float(v) for v in self.exponents],
                "stderr": [float(v) for v in self.stderr], "n": self.n}


def batch_stderr(batch_means) -> np.ndarray:
    b = np.asarray(batch_means)
    return b.std(axis=0, ddof=1) / np.sqrt(b.shape[0])


def lyapunov_spectrum_qr(sys: SystemSpec, p0, n: int, n_transient: int = 1000,
                         n_batches: int = 20) -> LyapunovEstimate:
    if n < 10_000:
        raise ValueError("lyapunov_spectrum_qr needs n >= 1e4")
    x, y, z = (float(v) for v in p0)
    mean, bm, _ = CK.lyapunov_qr(sys.params, x, y, z, _Q0, int(n), int(n_transient), int(n_batches))
    return LyapunovEstimate(mean, batch_stderr(bm), int(n), bm)


def central_exponent(sys: SystemSpec, p0, n: int, n_transient: int = 0,
                     n_batches: int = 20, return_stderr: bool = False):
    """(1/n) sum log g'(z_i + r(x_i)) along the orbit of p0."""
    x, y, z = (float(v) for v in p0)
    mean, bm = CK.central_sum(sys.params, x, y, z, int(n), int(n_transient), int(n_batches))
    if return_stderr:
        return float(mean), float(batch_stderr(bm[:, None])[0])
    return float(mean)


def dyadic(p, bits: int = 40):
    """Round base coordinates down to the 2^-bits grid.

    A integer matrix maps this grid into itself exactly in double precision,
    so orbits of such points carry no base round-off.
    """
    q = np.array(p, dtype=float, copy=True)
    scale = float(2 ** bits)
    q[..., :2] = np.floor(q[..., :2] * scale) / scale
    return q


def finite_time_central_profile(sys: SystemSpec, curve, n: int, exact_base: bool = True):
    """Per-node finite-time central exponent (1/n) sum_{i<n} log g'.

    `curve` is an UnstableCurve or an (m, 3) array.  With `exact_base`
    the nodes are snapped to the dyadic grid (displacement < 1e-12)
    so that the base orbit is computed without round-off.
    """
    if sys.delta > 0.0:
        raise ValueError("central profile is defined for delta = 0")
    pts = curve.points if hasattr(curve, "points") else np.asarray(curve, dtype=float)
    pts = np.ascontiguousarray(dyadic(pts) if exact_base else pts)
    return CK.central_profile(sys.params, pts, int(n)) / n
