"""Experiment configuration documents.

An ExperimentConfig is a JSON object

    {"schema": "skewlab.experiment/1",
     "experiment": "regular" | "weak" | "rare" | "assumptions" | "lyapunov" | "cc" | "curve",
     "system": {...SystemSpec document...},      # optional for weak / rare
     "seed": 0, "threads": 1, "out": "out",
     "params": {...overrides of the experiment defaults...}}

Unknown keys are rejected so that a typo cannot silently fall back to a
default.  Together with the code version the document determines every
output bit for bit.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field

from ..errors import ConfigError
from ..torus_systems import FiberSpec, RotationSpec, SystemSpec

SCHEMA_EXPERIMENT = "skewlab.experiment/1"

DEFAULTS = {
    "regular": {
        "cone_samples": 100_000, "growth_samples": 1000, "growth_n": 30,
        "n_domains": 100, "cc_nodes": 4096, "domain_seed_length": 0.05, "domain_steps": 4,
        "lyap_seeds": 32, "lyap_steps": 1_000_000, "lyap_transient": 1000, "lyap_batches": 20,
        "cesaro_n": 2000, "cesaro_burn_in": 1000, "cesaro_samples": 4096, "bins": [64, 64, 64],
        "mixed_n": 60, "mixed_length": 0.05, "mixed_steps": 2, "mixed_h_max": 1e-3,
        "curve_depth": 40, "n_shards": 8,
    },
    "weak": {
        "N": 2, "kappa": 0.4, "delta_geom": 0.09, "delta_birkhoff": 1e-3,
        "birkhoff_starts": 10, "birkhoff_steps": 1_000_000,
        "birkhoff_burn_in": 1000, "observables": ["cos_z", "sin_xy_cos_z", "cos_x_cos_z"],
        "grid_exponents": [10, 11, 12, 13], "n_lines": 32, "line_bits": 20,
        "graph_tol": 1e-10, "graph_cap": 10_000,
        "secant_scales": [0.1, 0.01, 0.001], "secant_centers": 64, "secant_points": 200,
        "scatter_points": 200_000, "scatter_width": 0.002, "scatter_steps": 200,
        "n_shards": 8,
    },
    "rare": {
        "N": 2, "lambda": 0.25, "x0": 0.25, "epsilons": [0.4, 0.2, 0.1, 0.05],
        "total_steps": 10_000_000, "n_orbits": 100, "burn_in": 1000, "bins": [64, 64, 64],
        "minus_radius": 0.1, "survivor_grid": 512, "survivor_n": 50,
        "slope_band": [0.6, 1.4], "tv_max": 0.02, "n_shards": 8,
    },
    "assumptions": {"groups": "auto"},
    "lyapunov": {"seeds": 32, "steps": 1_000_000, "transient": 1000, "batches": 20, "n_shards": 32},
    "cc": {"cone_samples": 100_000, "n_domains": 100, "cc_nodes": 4096,
           "domain_seed_length": 0.05, "domain_steps": 4},
    "curve": {"point": [0.3, 0.6, 0.2], "length": 0.05, "steps": 2, "h_max": 1e-3,
              "n_trunc": 40},
}

EXPERIMENTS = tuple(DEFAULTS)
_TOP_KEYS = {"schema", "experiment", "system", "seed", "threads", "out", "params"}


@dataclass
class ExperimentConfig:
    experiment: str
    system: SystemSpec | None = None
    seed: int = 0
    threads: int = 1
    out: str = "out"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in DEFAULTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {list(EXPERIMENTS)}")
        unknown = set(self.params) - set(DEFAULTS[self.experiment])
        if unknown:
            raise ConfigError(f"unknown parameter(s) for {self.experiment}: {sorted(unknown)}")
        merged = copy.deepcopy(DEFAULTS[self.experiment])
        merged.update(self.params)
        self.params = merged
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if not isinstance(self.threads, int) or self.threads < 1:
            raise ConfigError(f"threads must be a positive integer, got {self.threads!r}")

    def __getitem__(self, key):
        return self.params[key]

    def require_system(self) -> SystemSpec:
        if self.system is None:
            raise ConfigError(f"experiment {self.experiment!r} needs a 'system' entry")
        return self.system

    def to_dict(self) -> dict:
        return {"schema": SCHEMA_EXPERIMENT, "experiment": self.experiment,
                "system": None if self.system is None else self.system.to_dict(),
                "seed": self.seed, "threads": self.threads, "out": self.out,
                "params": self.params}

    def canonical_json(self) -> str:
        """Sorted, whitespace-free JSON; the thread count and output path are excluded
        because they do not affect results."""
        d = self.to_dict()
        d.pop("threads")
        d.pop("out")
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        if d.get("schema", SCHEMA_EXPERIMENT) != SCHEMA_EXPERIMENT:
            raise ConfigError(f"unsupported schema {d.get('schema')!r}")
        if "experiment" not in d:
            raise ConfigError("config needs an 'experiment' entry")
        sysd = d.get("system")
        try:
            system = None if sysd is None else SystemSpec.from_dict(sysd)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid system: {exc}") from exc
        params = d.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("'params' must be an object")
        return cls(d["experiment"], system, d.get("seed", 0), d.get("threads", 1),
                   d.get("out", "out"), dict(params))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        return cls.from_dict(d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_json(text)


def reference_regular() -> SystemSpec:
    """N = 10, PROJECTIVE lambda = 0.4, linear rotation."""
    return SystemSpec.build(10, FiberSpec.projective(0.4), RotationSpec.linear())


def reference_rare(epsilon: float, lam: float = 0.25, x0: float = 0.25, n: int = 2) -> SystemSpec:
    return SystemSpec.build(n, FiberSpec.projective(lam), RotationSpec.rare(epsilon, x0))
