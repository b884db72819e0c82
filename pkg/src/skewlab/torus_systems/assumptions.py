"""Numerical checkers for the standing hypotheses.

Group A (regular coupling)
  A1  lam_A < lam_min < 1 < lam_max < 1/lam_A
  A2  0 < c <= r' <= C
  A3  beta > 0, with the extremes of the base expansion rates
Group B (rare interaction)
  B1  lam_max > max_p |DA_p|
  B2  r vanishes off I_eps and climbs one full turn inside it
  B3  neighbourhoods I+ of z_r, I- of z_a and constants (c1, C0, c0, d),
      located by a grid search over interval radii
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .maps import fiber_deriv, fiber_lift, rotation_deriv, rotation_eval
from .spec import SystemSpec

GRID = 10_000


@dataclass
class Clause:
    name: str
    passed: bool
    values: dict = field(default_factory=dict)
    message: str = ""

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed),
                "values": _jsonable(self.values), "message": self.message}


@dataclass
class AssumptionReport:
    group: str
    clauses: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses)

    def clause(self, name) -> Clause:
        for c in self.clauses:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self):
        return [c.name for c in self.clauses if not c.passed]

    def to_dict(self):
        return {"group": self.group, "passed": self.passed,
                "clauses": [c.to_dict() for c in self.clauses]}


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


def _grid(n=GRID):
    return np.arange(n) / n


def fiber_monotone(sys: SystemSpec) -> bool:
    z = np.linspace(0.0, 1.0, GRID + 1)
    return bool(np.all(np.diff(fiber_lift(sys.fiber, z)) > 0))


def rotation_monotone(sys: SystemSpec) -> bool:
    """Lifted r non-decreasing over one period with total increase = degree."""
    x = _grid()
    r = rotation_eval(sys.rotation, x)
    if sys.rotation.degree == 0:
        return bool(np.all(r == 0.0))
    # circular increments, reduced to (-1/2, 1/2]
    jumps = np.diff(np.concatenate([r, r[:1]]))
    jumps = jumps - np.ceil(jumps - 0.5)
    return bool(np.all(jumps >= 0.0) and abs(jumps.sum() - 1.0) < 1e-12)


def check_assumptions_A(sys: SystemSpec) -> AssumptionReport:
    e = sys.eigen
    lam_a = max(e.alpha_s, 1.0 / e.alpha_u)
    fib = sys.fiber
    lmin, lmax = fib.lam_min, fib.lam_max
    z = _grid()
    gp = fiber_deriv(fib, z)
    a1 = lam_a < lmin < 1.0 < lmax < 1.0 / lam_a
    c1 = Clause("A1", a1, {"lambda_A": lam_a, "lam_min": lmin, "lam_max": lmax,
                           "inv_lambda_A": 1.0 / lam_a,
                           "sampled_min_gprime": gp.min(), "sampled_max_gprime": gp.max(),
                           "g_monotone": fiber_monotone(sys)},
                f"{lam_a:.6g} < {lmin:.6g} < 1 < {lmax:.6g} < {1.0 / lam_a:.6g}")
    rot = sys.rotation
    rp = rotation_deriv(rot, _grid())
    c_lo, c_hi = rot.c_lo, rot.c_hi
    a2 = rot.variant in ("linear", "smooth") and c_lo > 0.0 and rotation_monotone(sys)
    msg = f"c = {c_lo:.6g}, C = {c_hi:.6g}"
    if not a2:
        msg += f"; {rot.variant} rotation has min r' = {c_lo:.6g}, (A2) needs r' >= c > 0"
    c2 = Clause("A2", a2, {"c_lo": c_lo, "c_hi": c_hi, "sampled_min_rprime": rp.min(),
                           "sampled_max_rprime": rp.max()}, msg)
    c3 = Clause("A3", e.beta > 0.0, {"beta": e.beta, "alpha_u_min": e.alpha_u,
                                     "alpha_u_max": e.alpha_u, "alpha_s_min": e.alpha_s,
                                     "alpha_s_max": e.alpha_s, "du": list(e.du), "ds": list(e.ds)},
                f"beta = {e.beta:.6g}")
    return AssumptionReport("A", [c1, c2, c3])


def b3_d_min(sys: SystemSpec, n=200_001) -> float:
    """Smallest d with  beta r' > 1/(2 eps)  wherever r is outside (-d, d)."""
    rot = sys.rotation
    x0, x1 = rot.interval
    x = (x0 + (x1 - x0) * np.linspace(0.0, 1.0, n)) % 1.0
    r = rotation_eval(rot, x)
    du_r = sys.eigen.beta * rotation_deriv(rot, x)
    dist = np.minimum(r, 1.0 - r)
    weak = du_r <= 0.5 / rot.epsilon
    return float(dist[weak].max()) if weak.any() else 0.0


def b3_witnesses(sys: SystemSpec, radii=None, n_sample=2001):
    """Enumerate (I+, I-) radius pairs admitting all (B3) constants."""
    fib = sys.fiber
    za, zr = fib.z_a, fib.z_r
    norm_a = sys.anosov.operator_norm
    if radii is None:
        radii = np.round(np.arange(1, 50) * 0.01, 10)
    d_min = b3_d_min(sys)
    t = np.linspace(-1.0, 1.0, n_sample)
    plus = []
    for rp in radii:
        c1_inv = float(fiber_deriv(fib, (zr + rp * t) % 1.0).min())
        if not c1_inv > norm_a:
            continue
        lo, hi = zr - rp, zr + rp
        glo = float(fiber_lift(fib, lo))
        ghi = float(fiber_lift(fib, hi))
        comp = (lo - glo, ghi - hi)
        plus.append((rp, c1_inv, glo, ghi, comp))
    minus = []
    for rm in radii:
        c0 = float(fiber_deriv(fib, (za + rm * t) % 1.0).max())
        if c0 < 1.0:
            minus.append((rm, c0))
    out = []
    for rp, c1_inv, glo, ghi, comp in plus:
        dist = min(comp)
        if not d_min < dist:
            continue
        for rm, c0 in minus:
            # g(I+) = (glo, ghi) must miss I- = (za - rm, za + rm) mod 1
            if glo < za + rm or ghi > za + 1.0 - rm:
                continue
            c0_max = c1_inv / norm_a
            out.append({"r_plus": rp, "r_minus": rm, "c1": 1.0 / c1_inv,
                        "C0": float(np.sqrt(c0_max)), "C0_sup": c0_max, "c0": c0,
                        "d": 0.5 * (d_min + dist), "d_range": [d_min, dist],
                        "components": list(comp),
                        "caption_form": bool(max(comp) < 0.5 * (d_min + dist))})
    return out, d_min


def check_assumptions_B(sys: SystemSpec) -> AssumptionReport:
    fib = sys.fiber
    norm_a = sys.anosov.operator_norm
    b1 = Clause("B1", fib.lam_max > norm_a, {"lam_max": fib.lam_max, "max_norm_DA": norm_a},
                f"{fib.lam_max:.6g} {'>' if fib.lam_max > norm_a else '<='} {norm_a:.6g}")
    rot = sys.rotation
    if rot.variant != "rare":
        b2 = Clause("B2", False, {"variant": rot.variant},
                    "(B2) needs a rotation supported on a strip I_eps")
        b3 = Clause("B3", False, {}, "not applicable without a rare rotation")
        return AssumptionReport("B", [b1, b2, b3])
    x = _grid()
    r = rotation_eval(rot, x)
    inside = ((x - rot.x0) % 1.0) < rot.epsilon
    off_zero = bool(np.all(r[~inside] == 0.0))
    rp_in = rotation_deriv(rot, x[inside])
    climbs = bool(np.all(rp_in[1:] > 0.0)) and rotation_monotone(sys)
    b2 = Clause("B2", off_zero and climbs,
                {"epsilon": rot.epsilon, "x0": rot.x0, "zero_off_strip": off_zero,
                 "degree_one_climb": climbs, "max_rprime": rot.c_hi},
                f"support in ({rot.x0:.6g}, {rot.x0 + rot.epsilon:.6g})")
    wit, d_min = b3_witnesses(sys)
    b3 = Clause("B3", len(wit) > 0,
                {"n_witnesses": len(wit), "d_min": d_min, "witnesses": wit,
                 "r_plus_values": sorted({w["r_plus"] for w in wit}),
                 "r_minus_values": sorted({w["r_minus"] for w in wit})},
                f"{len(wit)} (I+, I-) radius pairs admit constants (c1, C0, c0, d)")
    return AssumptionReport("B", [b1, b2, b3])


def b3_accepts_minus_radius(report: AssumptionReport, radius: float) -> bool:
    wit = report.clause("B3").values.get("witnesses", [])
    return any(abs(w["r_minus"] - radius) < 1e-12 for w in wit)
