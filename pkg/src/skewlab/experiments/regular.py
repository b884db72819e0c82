"""Regular coupling: cones, contracting-centre checks, spectra and the SRB histogram."""
from __future__ import annotations

import csv
import math

import numpy as np

from ..cocycle import (require_assumptions_A, cone_growth_constant, finite_time_central_profile,
                       lyapunov_spectrum_qr, verify_cone)
from ..measures import (DEFAULT_OBS, base_uniformity_tv, cesaro_pushforward, write_marginals_csv)
from ..parallel import ordered_map, spawn_seeds
from ..torus_systems import SystemSpec
from ..unstable_curves import (cc_integral, cc_sufficient_terms, evolve_and_refine,
                               fundamental_domains, seed_unstable_segment)


def sample_domains(sys: SystemSpec, n_domains: int, seed_length: float, steps: int,
                   seed: int = 0, h_max: float = 0.05, max_curves: int = 64):
    """At least n_domains fundamental domains from curves grown at random points."""
    rng = np.random.default_rng(spawn_seeds(seed, 2)[1])
    doms = []
    for _ in range(max_curves):
        c = seed_unstable_segment(sys, rng.random(3), seed_length, h_max=h_max)
        doms.extend(fundamental_domains(evolve_and_refine(sys, c, steps)))
        if len(doms) >= n_domains:
            return doms[:n_domains]
    raise RuntimeError(f"only {len(doms)} fundamental domains after {max_curves} curves")


def cc_domain_values(sys: SystemSpec, domains, n_nodes: int = 4096, threads: int | None = 1):
    return np.array(ordered_map(lambda d: cc_integral(sys, d, n_nodes), domains, threads))


def lyapunov_runs(sys: SystemSpec, n_seeds: int, steps: int, transient: int = 1000,
                  batches: int = 20, seed: int = 0, threads: int | None = 1):
    seeds = spawn_seeds(seed, n_seeds)
    starts = [np.random.default_rng(s).random(3) for s in seeds]
    ests = ordered_map(lambda p: lyapunov_spectrum_qr(sys, p, steps, transient, batches), starts,
                       threads)
    return starts, ests


def lyapunov_summary(sys: SystemSpec, ests) -> dict:
    ex = np.array([e.exponents for e in ests])
    se = np.array([e.stderr for e in ests])
    mid, mid_se = ex[:, 1], se[:, 1]
    spread = float(mid.std(ddof=1)) if len(mid) > 1 else 0.0
    rms = float(np.sqrt(np.mean(mid_se ** 2)))
    top_err = float(np.abs(ex[:, 0] - math.log(sys.eigen.alpha_u)).max())
    return {"mean": ex.mean(axis=0).tolist(), "middle_max": float(mid.max()),
            "middle_spread": spread, "middle_rms_stderr": rms, "top_max_error": top_err,
            "middle_all_negative": bool(np.all(mid < 0)),
            "runs_agree": bool(spread <= 3.0 * rms),
            "top_matches_log_alpha_u": bool(top_err < 1e-4)}


def write_lyapunov_csv(path, starts, ests):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["run", "x0", "y0", "z0", "lambda1", "lambda2", "lambda3",
                     "stderr1", "stderr2", "stderr3", "n"])
        for i, (p, e) in enumerate(zip(starts, ests)):
            wr.writerow([i, *(repr(float(v)) for v in p), *(repr(float(v)) for v in e.exponents),
                         *(repr(float(v)) for v in e.stderr), e.n])


def mixed_sign_search(sys: SystemSpec, length: float, steps: int, h_max: float, n: int,
                      seed: int = 0, hi: float = 10.0, lo: float = 0.1) -> dict:
    """Nodes of one grown W^u segment with n-step central products > hi and < lo."""
    p = np.random.default_rng(spawn_seeds(seed, 3)[2]).random(3)
    curve = evolve_and_refine(sys, seed_unstable_segment(sys, p, length, h_max=h_max), steps)
    logs = finite_time_central_profile(sys, curve, n) * n
    big, small = logs > math.log(hi), logs < math.log(lo)
    return {"seed_point": [float(v) for v in p], "nodes": len(curve), "n": int(n),
            "count_above": int(big.sum()), "count_below": int(small.sum()),
            "max_log_product": float(logs.max()), "min_log_product": float(logs.min()),
            "found": bool(big.any() and small.any()), "curve": curve, "log_products": logs}


def run_regular_coupling(cfg, out=None) -> dict:
    sys = cfg.require_system()
    p = cfg.params
    require_assumptions_A(sys)
    seeds = spawn_seeds(cfg.seed, 4)
    cone = verify_cone(sys, p["cone_samples"], np.random.default_rng(seeds[0]))
    c0 = cone_growth_constant(sys, p["growth_samples"], p["growth_n"], np.random.default_rng(seeds[1]))
    cc_terms = cc_sufficient_terms(sys)
    doms = sample_domains(sys, p["n_domains"], p["domain_seed_length"], p["domain_steps"], cfg.seed)
    cc_vals = cc_domain_values(sys, doms, p["cc_nodes"], cfg.threads)
    starts, ests = lyapunov_runs(sys, p["lyap_seeds"], p["lyap_steps"], p["lyap_transient"],
                                 p["lyap_batches"], cfg.seed, cfg.threads)
    lyap = lyapunov_summary(sys, ests)
    rng = np.random.default_rng(seeds[3])
    seed_curve = seed_unstable_segment(sys, rng.random(3), 0.01)
    hist = cesaro_pushforward(sys, seed_curve, p["cesaro_n"], p["cesaro_burn_in"], p["bins"],
                              p["cesaro_samples"], DEFAULT_OBS, cfg.seed, p["n_shards"], cfg.threads)
    mixed = mixed_sign_search(sys, p["mixed_length"], p["mixed_steps"], p["mixed_h_max"],
                              p["mixed_n"], cfg.seed)
    report = {
        "system": sys.to_dict(),
        "cone": cone.to_dict(), "growth_c0": c0,
        "cc_sufficient": cc_terms,
        "cc_domains": {"count": len(cc_vals), "max": float(cc_vals.max()),
                       "min_margin": float(-cc_vals.max()), "mean": float(cc_vals.mean())},
        "lyapunov": lyap,
        "cesaro": {"base_tv": base_uniformity_tv(hist), "n_samples": hist.n_samples,
                   "integrals": {k: v / hist.total_weight for k, v in sorted(hist.moments.items())}},
        "mixed": {k: v for k, v in mixed.items() if k not in ("curve", "log_products")},
    }
    report["cc_status"] = "CC proven (sufficient condition)" if cc_terms["lhs"] < 0 else "CC unproven"
    report["checks"] = {
        "cone_invariance": cone.passed,
        "cone_growth": c0 > 0.1,
        "cc_domains_negative": bool(np.all(cc_vals < 0)),
        "middle_exponent_negative": lyap["middle_all_negative"],
        "runs_agree": lyap["runs_agree"],
        "top_exponent": lyap["top_matches_log_alpha_u"],
        "mixed_behavior": mixed["found"],
    }
    if out is not None:
        write_lyapunov_csv(out.file("lyapunov.csv"), starts, ests)
        with open(out.file("cc_domains.csv"), "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["domain", "k", "t_lo", "t_hi", "cc_integral"])
            for i, (d, v) in enumerate(zip(doms, cc_vals)):
                wr.writerow([i, d.k, repr(d.t_lo), repr(d.t_hi), repr(float(v))])
        hist.save(out.file("cesaro_hist.skh"))
        write_marginals_csv(hist, out.file("cesaro_fiber_marginal.csv"),
                            out.file("cesaro_base_marginal.csv"))
        with open(out.file("mixed_profile.csv"), "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["param", "x", "y", "z", "log_product"])
            c = mixed["curve"]
            for t, q, v in zip(c.t, c.points, mixed["log_products"]):
                wr.writerow([repr(float(t)), *(repr(float(a)) for a in q), repr(float(v))])
        out.write_json("srb_report.json", report)
    return report
