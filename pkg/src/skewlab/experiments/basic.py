"""Single-purpose runs behind the check-assumptions, lyapunov, cc-check and curve-dump commands."""
from __future__ import annotations

import csv
import math

import numpy as np

from ..cocycle import require_assumptions_A, verify_cone
from ..errors import ConfigError
from ..parallel import spawn_seeds
from ..torus_systems import check_assumptions_A, check_assumptions_B
from ..unstable_curves import (cc_sufficient_terms, evolve_and_refine, rho_density,
                               seed_unstable_segment, write_curve_csv)
from .regular import cc_domain_values, lyapunov_runs, sample_domains, write_lyapunov_csv


def run_assumptions(cfg, out=None) -> dict:
    sys = cfg.require_system()
    groups = cfg["groups"]
    if groups == "auto":
        groups = ["B"] if sys.rotation.variant == "rare" else ["A"]
    elif isinstance(groups, str):
        groups = [groups]
    reports = []
    for g in groups:
        if g == "A":
            reports.append(check_assumptions_A(sys))
        elif g == "B":
            reports.append(check_assumptions_B(sys))
        else:
            raise ConfigError(f"unknown assumption group {g!r}; use 'A', 'B' or 'auto'")
    report = {"system": sys.to_dict(), "reports": [r.to_dict() for r in reports],
              "passed": all(r.passed for r in reports)}
    if out is not None:
        out.write_json("assumptions_report.json", report)
    return report


def run_lyapunov(cfg, out=None) -> dict:
    sys = cfg.require_system()
    p = cfg.params
    starts, ests = lyapunov_runs(sys, p["seeds"], p["steps"], p["transient"], p["batches"],
                                 cfg.seed, cfg.threads)
    ex = np.array([e.exponents for e in ests])
    report = {"system": sys.to_dict(), "mean": ex.mean(axis=0).tolist(),
              "min": ex.min(axis=0).tolist(), "max": ex.max(axis=0).tolist(),
              "runs": [e.to_dict() for e in ests]}
    checks = {"finite": bool(np.all(np.isfinite(ex))),
              "ordered": bool(np.all(np.diff(ex, axis=1) <= 0))}
    if sys.is_skew:
        # the base is a factor, so the top exponent is log alpha_u exactly
        checks["top_exponent"] = bool(np.abs(ex[:, 0] - math.log(sys.eigen.alpha_u)).max() < 1e-4)
    report["checks"] = checks
    if out is not None:
        write_lyapunov_csv(out.file("lyapunov.csv"), starts, ests)
        out.write_json("lyapunov_report.json", report)
    return report


def run_cc_check(cfg, out=None) -> dict:
    sys = cfg.require_system()
    p = cfg.params
    require_assumptions_A(sys)
    cone = verify_cone(sys, p["cone_samples"], np.random.default_rng(spawn_seeds(cfg.seed, 4)[0]))
    terms = cc_sufficient_terms(sys)
    doms = sample_domains(sys, p["n_domains"], p["domain_seed_length"], p["domain_steps"], cfg.seed)
    vals = cc_domain_values(sys, doms, p["cc_nodes"], cfg.threads)
    report = {"system": sys.to_dict(), "cone": cone.to_dict(), "cc_sufficient": terms,
              "cc_status": "CC proven (sufficient condition)" if terms["lhs"] < 0 else "CC unproven",
              "cc_domains": {"count": len(vals), "max": float(vals.max()),
                             "min_margin": float(-vals.max())},
              "checks": {"cone_invariance": cone.passed,
                         "cc_domains_negative": bool(np.all(vals < 0))}}
    if out is not None:
        with open(out.file("cc_domains.csv"), "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["domain", "k", "t_lo", "t_hi", "cc_integral"])
            for i, (d, v) in enumerate(zip(doms, vals)):
                wr.writerow([i, d.k, repr(d.t_lo), repr(d.t_hi), repr(float(v))])
        out.write_json("cc_report.json", report)
    return report


def run_curve_dump(cfg, out=None) -> dict:
    sys = cfg.require_system()
    p = cfg.params
    c = seed_unstable_segment(sys, np.asarray(p["point"], dtype=float) % 1.0, p["length"],
                              h_max=p["h_max"])
    c = evolve_and_refine(sys, c, p["steps"])
    prof = rho_density(sys, c, p["n_trunc"])
    report = {"system": sys.to_dict(), "nodes": len(c), "arclength": c.arclength,
              "z_span": c.z_span, "rho_max_ratio": prof.max_ratio, "checks": {}}
    if out is not None:
        write_curve_csv(c, out.file("curve.csv"), prof)
        out.write_json("curve_report.json", report)
    return report
