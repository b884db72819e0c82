"""Weak coupling: perturbations of the uncoupled product A x g.

The geometry probes use the skew perturbation (base feedback off), whose
attractor is the graph of h : T^2 -> T with h(w) = g(h(A^-1 w)) +
delta sin 2 pi (A^-1 w).  The graph transform is evaluated pointwise on the
dyadic grid, where A^-1 maps nodes to nodes exactly, so no interpolation
is needed.
"""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError, ConvergenceError
from ..measures import birkhoff_average
from ..parallel import ordered_map, spawn_seeds, split_counts
from ..torus_systems import AnosovSpec, FiberSpec, RotationSpec, SystemSpec
from ..torus_systems._kernels import FAM_SINE
from . import _weak_kernels as WK


def classify_dichotomy(sys: SystemSpec) -> str:
    """'normally_hyperbolic' if lam_min < alpha_s, 'wild' if lam_min > alpha_s."""
    d = sys.fiber.lam_min - sys.eigen.alpha_s
    if d < 0:
        return "normally_hyperbolic"
    return "wild" if d > 0 else "borderline"


def _dyadic_points(rng, n, bits):
    s = float(2 ** bits)
    return np.floor(rng.random((n, 2)) * s) / s


def graph_depth(sys: SystemSpec, tol: float = 1e-10, cap: int = 10_000, seed: int = 0,
                n_probe: int = 256) -> tuple[int, float]:
    """Smallest tested depth K with sup |h_{K+1} - h_K| < tol on a probe sample."""
    pts = _dyadic_points(np.random.default_rng(seed), n_probe, WK.DYADIC_BITS)
    k = 16
    while True:
        a = WK.graph_many(sys.params, pts, k, sys.fiber.z_a)
        b = WK.graph_many(sys.params, pts, k + 1, sys.fiber.z_a)
        d = np.abs(b - a - np.ceil(b - a - 0.5)).max()
        if d < tol:
            return k, float(d)
        if k >= cap:
            raise ConvergenceError(f"graph transform not contracting: sup change {d:.3g} at depth {k}")
        k = min(2 * k, cap)


def graph_transform(sys: SystemSpec, pts2, depth: int) -> np.ndarray:
    """Attractor graph h at base points (exact for dyadic points)."""
    return WK.graph_many(sys.params, np.ascontiguousarray(pts2, dtype=float), int(depth), sys.fiber.z_a)


def slope_statistic(sys: SystemSpec, m: int, starts, depth: int) -> float:
    """Max difference quotient of h along x-lines with spacing 2^-m."""
    dirs = np.tile(np.array([[1.0, 0.0]]), (len(starts), 1))
    return float(WK.line_slope_max(sys.params, np.ascontiguousarray(starts), dirs, int(m),
                                   int(depth), sys.fiber.z_a))


def secant_angles(sys: SystemSpec, scales, n_centers: int, n_points: int, depth: int,
                  seed: int = 0) -> dict:
    """Min angle (degrees) between graph secants inside eps-balls and the fiber axis.

    The fiber axis stands in for the perturbed centre direction (an O(delta)
    approximation).  Ball points are sampled at log-uniform radii.
    """
    rng = np.random.default_rng(seed)
    out = {}
    for i, eps in enumerate(scales):
        centers = _dyadic_points(rng, n_centers, WK.DYADIC_BITS)
        out[float(eps)] = float(WK.secant_probe(sys.params, centers, float(eps), int(n_points),
                                                int(depth), sys.fiber.z_a, int(seed) * 1000 + i))
    return out


def slab_scatter(sys: SystemSpec, n_points: int, width: float, burn_in: int = 200,
                 seed: int = 0, n_shards: int = 8, threads: int | None = 1) -> np.ndarray:
    """(E^s coordinate, z) of attractor points in the slab |d . du| < width."""
    e = sys.eigen
    du, ds = np.asarray(e.du), np.asarray(e.ds)
    want = split_counts(n_points, n_shards)
    seeds = spawn_seeds(seed, n_shards)
    max_steps = int(50 * n_points / max(width, 1e-6) / n_shards) + 10_000

    def run(i):
        p = np.random.default_rng(seeds[i]).random(3)
        return WK.slab_scatter(sys.params, p[0], p[1], p[2], int(burn_in), int(want[i]),
                               float(width), du, ds, max_steps)

    return np.concatenate(ordered_map(run, range(n_shards), threads))


@dataclass
class GeometryProbeReport:
    kappa: float
    delta: float
    alpha_s: float
    lam_min: float
    classification: str
    depth: int
    sup_change: float
    slope_stats: dict
    slope_change_fine: float
    growth_ratio: float
    secant_angles: dict
    scatter_feedback: bool = True
    scatter_points: int = 0
    checks: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["slope_stats"] = {str(k): v for k, v in self.slope_stats.items()}
        d["secant_angles"] = {repr(k): v for k, v in self.secant_angles.items()}
        return d


def weak_systems(n: int, kappa: float, delta_geom: float, delta_birkhoff: float):
    """(geometry skew system, scatter system, Birkhoff system) for SINE kappa over A_N."""
    a, fib, rot = AnosovSpec.family(n), FiberSpec.sine(kappa), RotationSpec.zero()
    geom = SystemSpec(a, fib, rot, delta_geom, feedback=False)
    try:
        scatter = SystemSpec(a, fib, rot, delta_geom, feedback=True)
    except ConfigError:
        scatter = geom
    birk = SystemSpec(a, fib, rot, delta_birkhoff, feedback=True)
    return geom, scatter, birk


def geometry_probe(cfg, geom: SystemSpec, scatter_sys: SystemSpec, out=None) -> GeometryProbeReport:
    p = cfg.params
    depth, sup = graph_depth(geom, p["graph_tol"], p["graph_cap"], cfg.seed)
    rng = np.random.default_rng(spawn_seeds(cfg.seed, 3)[0])
    starts = _dyadic_points(rng, p["n_lines"], p["line_bits"])
    ms = [int(m) for m in p["grid_exponents"]]
    stats = dict(zip(ms, ordered_map(lambda m: slope_statistic(geom, m, starts, depth), ms,
                                     cfg.threads)))
    fine = abs(stats[ms[-1]] / stats[ms[-2]] - 1.0) if stats[ms[-2]] > 0 else 0.0
    growth = stats[ms[-1]] / stats[ms[0]] if stats[ms[0]] > 0 else 0.0
    angles = secant_angles(geom, p["secant_scales"], p["secant_centers"], p["secant_points"],
                           depth, cfg.seed)
    cls = classify_dichotomy(geom)
    pts = slab_scatter(scatter_sys, p["scatter_points"], p["scatter_width"], p["scatter_steps"],
                       cfg.seed, p["n_shards"], cfg.threads)
    if out is not None:
        with open(out.file(f"figure1_scatter_kappa{geom.fiber.param:g}.csv"), "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["s", "z"])
            for s, z in pts:
                wr.writerow([repr(float(s)), repr(float(z))])
    smallest = min(angles)
    checks = {"dichotomy_consistent": cls == ("wild" if geom.fiber.lam_min > geom.eigen.alpha_s
                                              else "normally_hyperbolic"),
              "slopes_positive": all(v > 0 for v in stats.values()) or geom.delta == 0.0}
    if cls == "normally_hyperbolic":
        checks["slope_stabilizes"] = fine < 0.05
    elif cls == "wild":
        checks["slope_grows_4x"] = growth >= 4.0
        checks["secant_angle_below_2deg"] = angles[smallest] < 2.0
    return GeometryProbeReport(geom.fiber.param, geom.delta, geom.eigen.alpha_s, geom.fiber.lam_min,
                               cls, depth, sup, stats, fine, growth, angles,
                               scatter_sys.feedback, len(pts), checks)


def birkhoff_check(sys: SystemSpec, n_starts: int, n: int, burn_in: int, observables,
                   seed: int = 0, threads: int | None = 1) -> dict:
    """Birkhoff averages from Lebesgue-random starts and their largest pairwise gap."""
    seeds = spawn_seeds(seed, n_starts)
    starts = [np.random.default_rng(s).random(3) for s in seeds]
    res = ordered_map(lambda p0: birkhoff_average(sys, p0, observables, n, burn_in), starts, threads)
    means = np.array([r.mean for r in res])
    errs = np.array([r.stderr for r in res])
    gap = means.max(axis=0) - means.min(axis=0)
    return {"observables": res[0].keys, "starts": [[float(v) for v in p] for p in starts],
            "means": means.tolist(), "stderr": errs.tolist(),
            "max_pairwise_diff": gap.tolist(), "n": int(n), "delta": sys.delta,
            "passed": bool(np.all(gap < 1e-2))}


def run_weak_coupling(cfg, out=None) -> dict:
    p = cfg.params
    if cfg.system is not None:
        if cfg.system.fiber.code != FAM_SINE:
            raise ConfigError("weak coupling runs use the SINE fiber family")
        n_sys = cfg.system
        n, kappa = None, cfg.system.fiber.param
        geom, scat, birk = (n_sys.replace(delta=p["delta_geom"], feedback=False), None,
                            n_sys.replace(delta=p["delta_birkhoff"], feedback=True))
        try:
            scat = n_sys.replace(delta=p["delta_geom"], feedback=True)
        except ConfigError:
            scat = geom
    else:
        n, kappa = p["N"], p["kappa"]
        geom, scat, birk = weak_systems(n, kappa, p["delta_geom"], p["delta_birkhoff"])
    rep = geometry_probe(cfg, geom, scat, out)
    birk_rep = birkhoff_check(birk, p["birkhoff_starts"], p["birkhoff_steps"], p["birkhoff_burn_in"],
                              p["observables"], cfg.seed, cfg.threads)
    unperturbed = graph_transform(geom.replace(delta=0.0), np.array([[0.25, 0.5], [0.125, 0.75]]), 8)
    report = {"geometry": rep.to_dict(), "birkhoff": birk_rep,
              "unperturbed_graph_max": float(np.abs(unperturbed).max())}
    checks = dict(rep.checks)
    checks["birkhoff_agreement"] = birk_rep["passed"]
    report["checks"] = checks
    if out is not None:
        with open(out.file(f"slope_stats_kappa{kappa:g}.csv"), "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["m", "spacing", "max_slope"])
            for m, v in rep.slope_stats.items():
                wr.writerow([m, repr(2.0 ** -m), repr(v)])
        with open(out.file(f"secant_angles_kappa{kappa:g}.csv"), "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["scale", "min_angle_deg"])
            for e, a in rep.secant_angles.items():
                wr.writerow([repr(e), repr(a)])
        out.write_json(f"weak_report_kappa{kappa:g}.json", report)
    return report
