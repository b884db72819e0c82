"""Command line entry point: ``skewlab <command> --config run.json``.

Exit codes: 0 success, 1 a checked property was violated (or a numerical
failure), 2 invalid configuration, 3 the system fails the required assumptions.
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings

from .errors import AssumptionError, ConfigError, SkewlabError
from .experiments.basic import run_assumptions, run_cc_check, run_curve_dump, run_lyapunov
from .experiments.config import ExperimentConfig, reference_regular
from .experiments.manifest import OutputDir
from .experiments.rare import run_rare_interaction
from .experiments.regular import run_regular_coupling
from .experiments.weak import run_weak_coupling

log = logging.getLogger("skewlab")

# command -> (experiment id, runner)
COMMANDS = {
    "check-assumptions": ("assumptions", run_assumptions),
    "lyapunov": ("lyapunov", run_lyapunov),
    "cc-check": ("cc", run_cc_check),
    "srb": ("regular", run_regular_coupling),
    "weak-geometry": ("weak", run_weak_coupling),
    "rare-sweep": ("rare", run_rare_interaction),
    "curve-dump": ("curve", run_curve_dump),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="skewlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (exp, _) in COMMANDS.items():
        p = sub.add_parser(name, help=f"run the {exp!r} experiment")
        p.add_argument("--config", help="ExperimentConfig JSON (defaults and the N=10 reference "
                                        "system when omitted)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
        p.add_argument("--out", help="output directory")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_config(args) -> ExperimentConfig:
    exp = COMMANDS[args.command][0]
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        if cfg.experiment != exp:
            raise ConfigError(f"{args.command} expects experiment {exp!r}, config has {cfg.experiment!r}")
    else:
        system = None if exp in ("weak", "rare") else reference_regular()
        cfg = ExperimentConfig(exp, system)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        cfg.seed = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be positive")
        cfg.threads = args.threads
    if args.out is not None:
        cfg.out = args.out
    return cfg


def _failed_checks(report) -> list[str]:
    if "passed" in report and report.get("passed") is False:
        return ["passed"]
    return [k for k, v in report.get("checks", {}).items() if not v]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    logging.captureWarnings(True)
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"skewlab: config error: {exc}", file=sys.stderr)
        return 2
    runner = COMMANDS[args.command][1]
    out = OutputDir(cfg.out)
    command = " ".join(["skewlab", *(sys.argv[1:] if argv is None else argv)])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            report = runner(cfg, out)
    except ConfigError as exc:
        print(f"skewlab: config error: {exc}", file=sys.stderr)
        code = 2
    except AssumptionError as exc:
        print(f"skewlab: assumptions fail: {exc}", file=sys.stderr)
        if exc.report is not None:
            out.write_json("assumptions_report.json", exc.report.to_dict())
        code = 3
    except SkewlabError as exc:
        print(f"skewlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = 1
    else:
        failed = _failed_checks(report)
        if args.command == "check-assumptions" and failed:
            code = 3
        elif failed:
            code = 1
        else:
            code = 0
        for k in failed:
            print(f"skewlab: check failed: {k}", file=sys.stderr)
    out.write_manifest(cfg, command, code)
    log.info("wrote %s (exit %d)", out.path, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
