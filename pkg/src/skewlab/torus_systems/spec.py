"""System descriptions: base automorphism, fiber map, rotation profile.

Everything here is a frozen value object.  `SystemSpec.params` packs a
spec into the flat vector consumed by the compiled kernels.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..errors import ConfigError
from . import _kernels as K

SCHEMA_SYSTEM = "skewlab.system/1"


@dataclass(frozen=True)
class Eigendata:
    alpha_u: float
    alpha_s: float
    du: tuple
    ds: tuple
    beta: float

    def to_dict(self):
        return {"alpha_u": self.alpha_u, "alpha_s": self.alpha_s,
                "du": list(self.du), "ds": list(self.ds), "beta": self.beta}


def _unit_eigvec(m11, m12, m21, m22, lam):
    # two equivalent kernel vectors of A - lam I; keep the better conditioned one
    v1 = np.array([float(m12), lam - m11])
    v2 = np.array([lam - m22, float(m21)])
    v = v1 if np.hypot(*v1) >= np.hypot(*v2) else v2
    return v / np.hypot(*v)


@dataclass(frozen=True)
class AnosovSpec:
    """Hyperbolic integer matrix [[m11, m12], [m21, m22]] acting on T^2."""

    m11: int
    m12: int
    m21: int
    m22: int

    def __post_init__(self):
        for name in ("m11", "m12", "m21", "m22"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                if isinstance(v, float) and v.is_integer():
                    object.__setattr__(self, name, int(v))
                else:
                    raise ConfigError(f"matrix entry {name} must be an integer, got {v!r}")
        if self.m11 * self.m22 - self.m12 * self.m21 != 1:
            raise ConfigError("Anosov matrix must have determinant 1")
        if self.m11 + self.m22 < 3:
            raise ConfigError("Anosov matrix must have trace >= 3 (hyperbolic, positive eigenvalues)")

    @classmethod
    def family(cls, n: int) -> "AnosovSpec":
        """The matrix [[N, N-1], [1, 1]]; N = 2 is the cat map."""
        return cls(int(n), int(n) - 1, 1, 1)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]], dtype=float)

    @property
    def inverse_matrix(self) -> np.ndarray:
        return np.array([[self.m22, -self.m12], [-self.m21, self.m11]], dtype=float)

    @cached_property
    def eigen(self) -> Eigendata:
        tr = self.m11 + self.m22
        root = math.sqrt(tr * tr - 4.0)
        au = 0.5 * (tr + root)
        as_ = 1.0 / au
        du = _unit_eigvec(self.m11, self.m12, self.m21, self.m22, au)
        ds = _unit_eigvec(self.m11, self.m12, self.m21, self.m22, as_)
        if du[0] < 0:
            du = -du
        if ds[0] > 0:
            ds = -ds
        return Eigendata(au, as_, (float(du[0]), float(du[1])),
                         (float(ds[0]), float(ds[1])), float(du[0]))

    @property
    def operator_norm(self) -> float:
        """max_p |DA_p| for the linear map: the largest singular value."""
        return float(np.linalg.norm(self.matrix, 2))

    def to_dict(self):
        return {"matrix": [[self.m11, self.m12], [self.m21, self.m22]]}


FIBER_FAMILIES = ("sine", "projective")


@dataclass(frozen=True)
class FiberSpec:
    """North-south circle diffeomorphism g with z_a = 0, z_r = 1/2.

    sine:        g(z) = z - (kappa / 2 pi) sin(2 pi z)
    projective:  tan(pi g(z)) = lam tan(pi z)
    """

    family: str
    param: float

    def __post_init__(self):
        fam = str(self.family).lower()
        object.__setattr__(self, "family", fam)
        if fam not in FIBER_FAMILIES:
            raise ConfigError(f"unknown fiber family {self.family!r}")
        p = float(self.param)
        object.__setattr__(self, "param", p)
        if not 0.0 < p < 1.0:
            raise ConfigError(f"fiber parameter must lie in (0, 1), got {p}")

    @classmethod
    def sine(cls, kappa: float) -> "FiberSpec":
        return cls("sine", kappa)

    @classmethod
    def projective(cls, lam: float) -> "FiberSpec":
        return cls("projective", lam)

    @property
    def code(self) -> int:
        return K.FAM_SINE if self.family == "sine" else K.FAM_PROJECTIVE

    z_a = 0.0
    z_r = 0.5

    @property
    def lam_min(self) -> float:
        return 1.0 - self.param if self.family == "sine" else self.param

    @property
    def lam_max(self) -> float:
        return 1.0 + self.param if self.family == "sine" else 1.0 / self.param

    def to_dict(self):
        key = "kappa" if self.family == "sine" else "lambda"
        return {"family": self.family, key: self.param}


ROTATION_VARIANTS = ("zero", "linear", "smooth", "rare")


@dataclass(frozen=True)
class RotationSpec:
    """Rotation profile r: T -> T driving the fiber.

    zero    r = 0 (uncoupled system)
    linear  r(x) = x
    smooth  r(x) = x + (s / 2 pi) sin(2 pi x)
    rare    quintic smoothstep climbing one full turn on (x0, x0 + epsilon)
    """

    variant: str
    s: float = 0.0
    epsilon: float = 0.0
    x0: float = 0.0

    def __post_init__(self):
        v = str(self.variant).lower()
        object.__setattr__(self, "variant", v)
        if v not in ROTATION_VARIANTS:
            raise ConfigError(f"unknown rotation variant {self.variant!r}")
        for name in ("s", "epsilon", "x0"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if v == "smooth" and not 0.0 <= self.s < 1.0:
            raise ConfigError(f"smooth rotation needs s in [0, 1), got {self.s}")
        if v == "rare":
            if not 0.0 < self.epsilon < 1.0:
                raise ConfigError(f"rare rotation needs epsilon in (0, 1), got {self.epsilon}")
            if not 0.0 <= self.x0 < 1.0:
                raise ConfigError(f"rare rotation needs x0 in [0, 1), got {self.x0}")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def linear(cls):
        return cls("linear")

    @classmethod
    def smooth(cls, s: float):
        return cls("smooth", s=s)

    @classmethod
    def rare(cls, epsilon: float, x0: float = 0.25):
        return cls("rare", epsilon=epsilon, x0=x0)

    @property
    def code(self) -> int:
        return ROTATION_VARIANTS.index(self.variant)

    @property
    def c_lo(self) -> float:
        return {"zero": 0.0, "linear": 1.0, "smooth": 1.0 - self.s, "rare": 0.0}[self.variant]

    @property
    def c_hi(self) -> float:
        if self.variant == "rare":
            return 1.875 / self.epsilon
        return {"zero": 0.0, "linear": 1.0, "smooth": 1.0 + self.s}[self.variant]

    @property
    def degree(self) -> int:
        return 0 if self.variant == "zero" else 1

    @property
    def interval(self):
        """The climb interval I_eps as (start, end) with end possibly > 1."""
        if self.variant != "rare":
            return None
        return (self.x0, self.x0 + self.epsilon)

    def to_dict(self):
        d = {"variant": self.variant}
        if self.variant == "smooth":
            d["s"] = self.s
        if self.variant == "rare":
            d["epsilon"] = self.epsilon
            d["x0"] = self.x0
        return d


@dataclass(frozen=True)
class SystemSpec:
    """F(x, y, z) = (A(x, y), g(z + r(x))) mod 1, optionally perturbed.

    For delta > 0 the map is
        G(x, y, z) = (A(x, y) + delta (sin 2 pi z, cos 2 pi z),
                      g(z + r(x)) + delta sin 2 pi (x + y))  mod 1
    and `feedback=False` drops the base term, leaving a skew product.
    """

    anosov: AnosovSpec
    fiber: FiberSpec
    rotation: RotationSpec = field(default_factory=RotationSpec.linear)
    delta: float = 0.0
    feedback: bool = True

    def __post_init__(self):
        d = float(self.delta)
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "feedback", bool(self.feedback))
        if not (d >= 0.0 and math.isfinite(d)):
            raise ConfigError(f"delta must be a nonnegative real, got {self.delta}")
        if d > 0.0:
            ratio = perturbation_det_ratio(self)
            if ratio <= 0.5:
                raise ConfigError(
                    f"delta={d} too large: sampled Jacobian determinant ratio {ratio:.3g} <= 0.5")

    @classmethod
    def build(cls, n: int, fiber: FiberSpec, rotation: RotationSpec | None = None,
              delta: float = 0.0, feedback: bool = True) -> "SystemSpec":
        return cls(AnosovSpec.family(n), fiber,
                   RotationSpec.linear() if rotation is None else rotation, delta, feedback)

    def replace(self, **changes) -> "SystemSpec":
        d = {"anosov": self.anosov, "fiber": self.fiber, "rotation": self.rotation,
             "delta": self.delta, "feedback": self.feedback}
        d.update(changes)
        return SystemSpec(**d)

    @cached_property
    def params(self) -> np.ndarray:
        return pack(self)

    @property
    def eigen(self) -> Eigendata:
        return self.anosov.eigen

    @property
    def is_skew(self) -> bool:
        return self.delta == 0.0 or not self.feedback

    # json

    def to_dict(self) -> dict:
        return {"schema": SCHEMA_SYSTEM, "anosov": self.anosov.to_dict(),
                "fiber": self.fiber.to_dict(), "rotation": self.rotation.to_dict(),
                "delta": self.delta, "feedback": self.feedback}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "SystemSpec":
        if not isinstance(d, dict):
            raise ConfigError("system description must be a JSON object")
        schema = d.get("schema", SCHEMA_SYSTEM)
        if schema != SCHEMA_SYSTEM:
            raise ConfigError(f"unsupported system schema {schema!r}")
        unknown = set(d) - {"schema", "anosov", "fiber", "rotation", "delta", "feedback"}
        if unknown:
            raise ConfigError(f"unknown system keys: {sorted(unknown)}")
        try:
            a = d["anosov"]
            if "N" in a:
                anosov = AnosovSpec.family(a["N"])
            else:
                (m11, m12), (m21, m22) = a["matrix"]
                anosov = AnosovSpec(m11, m12, m21, m22)
            f = d["fiber"]
            fam = str(f["family"]).lower()
            key = "kappa" if fam == "sine" else "lambda"
            fiber = FiberSpec(fam, f.get(key, f.get("param")))
            r = d.get("rotation", {"variant": "linear"})
            rotation = RotationSpec(r["variant"], s=r.get("s", 0.0),
                                    epsilon=r.get("epsilon", 0.0), x0=r.get("x0", 0.0))
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed system description: {exc!r}") from None
        return cls(anosov, fiber, rotation, d.get("delta", 0.0), d.get("feedback", True))

    @classmethod
    def from_json(cls, text: str) -> "SystemSpec":
        return cls.from_dict(json.loads(text))


def pack(sys: SystemSpec) -> np.ndarray:
    p = np.zeros(K.NPAR)
    a = sys.anosov
    p[K.P_M11:K.P_M22 + 1] = (a.m11, a.m12, a.m21, a.m22)
    p[K.P_FAM] = sys.fiber.code
    p[K.P_FPAR] = sys.fiber.param
    rot = sys.rotation
    p[K.P_ROT] = rot.code
    p[K.P_R1] = rot.s if rot.variant == "smooth" else rot.epsilon
    p[K.P_R2] = rot.x0
    p[K.P_DELTA] = sys.delta
    p[K.P_FEEDBACK] = 1.0 if sys.feedback else 0.0
    e = a.eigen
    p[K.P_AU] = e.alpha_u
    p[K.P_DUX], p[K.P_DUY] = e.du
    p.setflags(write=False)
    return p


def perturbation_det_ratio(sys: SystemSpec, n_grid: int = 24) -> float:
    """min over a grid of det DG_delta / det DF_0 (delta validity certificate)."""
    g = (np.arange(n_grid) + 0.5) / n_grid
    pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
    par = pack(sys)
    jac = K.jacobian_many(par, pts)
    par0 = par.copy()
    par0[K.P_DELTA] = 0.0
    jac0 = K.jacobian_many(par0, pts)
    return float(np.min(np.linalg.det(jac) / np.linalg.det(jac0)))

