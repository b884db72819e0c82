"""Empirical invariant measures: Birkhoff averages, Cesaro pushforwards of
curve measures, orbit clouds and histogram statistics."""
from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import _measure_kernels as MK
from .cocycle import batch_stderr
from .parallel import ordered_map, spawn_seeds, split_counts
from .torus_systems import SystemSpec
from .unstable_curves import UnstableCurve, rho_density

DEFAULT_BINS = (64, 64, 64)
DEFAULT_BURN_IN = 1000


@dataclass(frozen=True)
class Observable:
    """A built-in test function on the 3-torus.

    All are continuous except the z-interval indicators `ind_z` and
    `out_z` (parameters: centre, radius).
    """

    name: str
    center: float = 0.0
    radius: float = 0.0

    _CODES = {"one": MK.OBS_ONE, "cos_x": MK.OBS_COS_X, "sin_x": MK.OBS_SIN_X,
              "cos_y": MK.OBS_COS_Y, "sin_y": MK.OBS_SIN_Y, "cos_z": MK.OBS_COS_Z,
              "sin_z": MK.OBS_SIN_Z, "cos_x_cos_z": MK.OBS_COS_X_COS_Z,
              "sin_xy_cos_z": MK.OBS_SIN_XY_COS_Z, "ind_z": MK.OBS_IND_Z, "out_z": MK.OBS_OUT_Z}

    def __post_init__(self):
        if self.name not in self._CODES:
            raise ValueError(f"unknown observable {self.name!r}; choose from {sorted(self._CODES)}")

    @property
    def code(self) -> int:
        return self._CODES[self.name]

    @property
    def key(self) -> str:
        if self.code in (MK.OBS_IND_Z, MK.OBS_OUT_Z):
            return f"{self.name}({self.center:g},{self.radius:g})"
        return self.name

    def __call__(self, pts) -> np.ndarray:
        codes, op = _pack_obs([self])
        return MK.obs_many(codes, op, np.ascontiguousarray(np.atleast_2d(pts), dtype=float))[:, 0]

    @classmethod
    def parse(cls, spec) -> "Observable":
        if isinstance(spec, Observable):
            return spec
        if isinstance(spec, dict):
            return cls(spec["name"], float(spec.get("center", 0.0)), float(spec.get("radius", 0.0)))
        return cls(str(spec))


def _pack_obs(obs):
    obs = [Observable.parse(o) for o in obs]
    codes = np.array([o.code for o in obs], dtype=np.int64)
    op = np.array([[o.center, o.radius] for o in obs], dtype=float).reshape(len(obs), 2)
    return codes, op


def builtin_observables() -> list[str]:
    return sorted(Observable._CODES)


@dataclass
class BirkhoffResult:
    mean: np.ndarray
    stderr: np.ndarray
    n: int
    burn_in: int
    keys: list

    def to_dict(self):
        return {"keys": self.keys, "mean": [float(v) for v in self.mean],
                "stderr": [float(v) for v in self.stderr], "n": self.n, "burn_in": self.burn_in}


def birkhoff_average(sys: SystemSpec, p0, obs, n: int, burn_in: int = DEFAULT_BURN_IN,
                     n_batches: int = 20) -> BirkhoffResult:
    """Time averages of one or more observables along the orbit of p0."""
    if n < 1000:
        raise ValueError("birkhoff_average needs n >= 1e3")
    obs = [obs] if isinstance(obs, (str, Observable, dict)) else list(obs)
    codes, op = _pack_obs(obs)
    x, y, z = (float(v) for v in p0)
    mean, bm = MK.birkhoff(sys.params, x, y, z, codes, op, int(n), int(burn_in), int(n_batches))
    return BirkhoffResult(mean, batch_stderr(bm), int(n), int(burn_in),
                          [Observable.parse(o).key for o in obs])


# histograms

_MAGIC = b"SKHIST01"


@dataclass
class EmpiricalMeasure3:
    """Histogram on an nx x ny x nz grid over [0, 1)^3.

    Every sample has unit weight, so counts are integers and merging is
    exact.  `moments` holds exact sums of observables over the same
    samples (keyed by Observable.key), so integrals of those observables
    carry no binning error.
    """

    counts: np.ndarray
    total_weight: float
    n_samples: int
    metadata: dict = field(default_factory=dict)
    moments: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, bins=DEFAULT_BINS, metadata=None) -> "EmpiricalMeasure3":
        return cls(np.zeros(tuple(int(b) for b in bins), dtype=np.int64), 0.0, 0, dict(metadata or {}))

    @property
    def bins(self) -> tuple:
        return self.counts.shape

    def __post_init__(self):
        if self.counts.ndim != 3:
            raise ValueError("counts must be a 3D array")

    def _check(self):
        if self.total_weight <= 0:
            raise ValueError("empty measure")

    def probabilities(self) -> np.ndarray:
        self._check()
        return self.counts / float(self.counts.sum())

    def add_points(self, pts):
        pts = np.ascontiguousarray(np.atleast_2d(pts), dtype=float)
        MK.accumulate(self.counts, pts)
        self.total_weight += float(len(pts))
        self.n_samples += len(pts)

    def merge(self, other: "EmpiricalMeasure3") -> "EmpiricalMeasure3":
        if self.bins != other.bins:
            raise ValueError("cannot merge histograms with different bins")
        mom = dict(self.moments)
        for k, v in other.moments.items():
            mom[k] = mom.get(k, 0.0) + v
        meta = dict(self.metadata)
        meta["merged"] = int(meta.get("merged", 1)) + int(other.metadata.get("merged", 1))
        return EmpiricalMeasure3(self.counts + other.counts, self.total_weight + other.total_weight,
                                 self.n_samples + other.n_samples, meta, mom)

    def integrate(self, obs) -> float:
        """Integral of an observable: exact moment if tracked, else bin-centre quadrature."""
        self._check()
        ob = Observable.parse(obs)
        if ob.key in self.moments:
            return float(self.moments[ob.key] / self.total_weight)
        nx, ny, nz = self.bins
        gx, gy, gz = np.meshgrid((np.arange(nx) + 0.5) / nx, (np.arange(ny) + 0.5) / ny,
                                 (np.arange(nz) + 0.5) / nz, indexing="ij")
        vals = ob(np.stack([gx.ravel(), gy.ravel(), gz.ravel()], -1)).reshape(self.bins)
        return float((vals * self.probabilities()).sum())

    # serialisation

    def to_bytes(self) -> bytes:
        meta = json.dumps({"metadata": self.metadata, "moments": self.moments}, sort_keys=True).encode()
        head = _MAGIC + struct.pack("<3Idqi", *self.bins, self.total_weight, self.n_samples, len(meta))
        return head + meta + self.counts.astype("<i8").tobytes(order="C")

    @classmethod
    def from_bytes(cls, data: bytes) -> "EmpiricalMeasure3":
        if data[:8] != _MAGIC:
            raise ValueError("not a skewlab histogram")
        fmt = "<3Idqi"
        off = 8 + struct.calcsize(fmt)
        nx, ny, nz, tw, ns, ml = struct.unpack(fmt, data[8:off])
        meta = json.loads(data[off:off + ml].decode())
        counts = np.frombuffer(data[off + ml:], dtype="<i8").astype(np.int64).reshape(nx, ny, nz)
        return cls(counts.copy(), tw, ns, meta["metadata"], meta["moments"])

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "EmpiricalMeasure3":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def fiber_marginal(m: EmpiricalMeasure3, normalized: bool = False) -> np.ndarray:
    c = m.counts.sum(axis=(0, 1))
    return c / c.sum() if normalized else c


def base_marginal(m: EmpiricalMeasure3, normalized: bool = False) -> np.ndarray:
    c = m.counts.sum(axis=2)
    return c / c.sum() if normalized else c


def mass_outside_interval(m: EmpiricalMeasure3, center: float, radius: float) -> float:
    """Mass of z-bins whose centre is at torus distance >= radius from `center`."""
    f = fiber_marginal(m)
    if f.sum() == 0:
        raise ValueError("empty measure")
    nz = len(f)
    zc = (np.arange(nz) + 0.5) / nz
    d = np.abs((zc - center) - np.ceil((zc - center) - 0.5))
    return float(f[d >= radius].sum() / f.sum())


def base_uniformity_tv(m: EmpiricalMeasure3) -> float:
    b = base_marginal(m, normalized=True)
    return float(0.5 * np.abs(b - 1.0 / b.size).sum())


def write_marginals_csv(m: EmpiricalMeasure3, fiber_path=None, base_path=None):
    if fiber_path is not None:
        f = fiber_marginal(m)
        nz = len(f)
        with open(fiber_path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["z_lo", "z_hi", "count", "mass"])
            for k in range(nz):
                wr.writerow([repr(k / nz), repr((k + 1) / nz), int(f[k]), repr(float(f[k] / f.sum()))])
    if base_path is not None:
        b = base_marginal(m)
        nx, ny = b.shape
        with open(base_path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["x_lo", "y_lo", "count", "mass"])
            for i in range(nx):
                for j in range(ny):
                    wr.writerow([repr(i / nx), repr(j / ny), int(b[i, j]), repr(float(b[i, j] / b.sum()))])


# Cesaro pushforwards and orbit clouds

DEFAULT_OBS = ("one", "cos_x", "cos_z", "sin_z", "cos_x_cos_z", "sin_xy_cos_z")


def mu_w_quantile_points(sys: SystemSpec, curve: UnstableCurve, n_samples: int,
                         profile=None) -> np.ndarray:
    """Points of equal mu_W mass: curve points at the (j + 1/2)/n quantiles."""
    if profile is None:
        profile = rho_density(sys, curve)
    cdf = np.concatenate([[0.0], np.cumsum(_segment_masses(curve, profile))])
    cdf /= cdf[-1]
    q = (np.arange(n_samples) + 0.5) / n_samples
    t = np.interp(q, cdf, curve.t)
    return curve.evaluate(t)


def _segment_masses(curve, profile):
    dens = profile.rho * np.sqrt(1.0 + profile.slopes ** 2)
    return 0.5 * (dens[1:] + dens[:-1]) * np.diff(curve.u)


def _cloud_measure(sys, pts, n, burn_in, bins, obs, metadata):
    codes, op = _pack_obs(obs)
    m = EmpiricalMeasure3.empty(bins, metadata)
    mom = np.zeros(len(codes))
    central = np.zeros(len(pts))
    pts = np.ascontiguousarray(pts, dtype=float).copy()
    MK.cloud_run(sys.params, pts, int(n), int(burn_in), m.counts, codes, op, mom, central)
    rec = max(int(n) - int(burn_in), 0)
    m.total_weight = float(rec * len(pts))
    m.n_samples = rec * len(pts)
    m.moments = {Observable.parse(o).key: float(v) for o, v in zip(obs, mom)}
    m.moments["log_central"] = float(central.sum())
    return m, pts


def cesaro_pushforward(sys: SystemSpec, seed_curve: UnstableCurve | None, n: int,
                       burn_in: int = DEFAULT_BURN_IN, bins=DEFAULT_BINS, n_samples: int = 4096,
                       observables=DEFAULT_OBS, seed: int = 0, n_shards: int = 8,
                       threads: int | None = 1) -> EmpiricalMeasure3:
    """Histogram of (1/(n - burn_in)) sum_{burn_in <= i < n} F^i_* mu_W.

    mu_W is represented by `n_samples` points of equal mass.  For delta > 0
    no exact unstable curve exists and Lebesgue-random starts are used
    instead (metadata source "orbit_cloud").
    """
    if n <= burn_in:
        raise ValueError("n must exceed burn_in")
    if sys.delta > 0.0 or seed_curve is None:
        return orbit_cloud_measure(sys, n_samples, n, burn_in, bins, observables, seed,
                                   n_shards, threads)
    pts = mu_w_quantile_points(sys, seed_curve, n_samples)
    shards = np.array_split(pts, n_shards)
    meta = {"source": "cesaro_pushforward", "n": int(n), "burn_in": int(burn_in),
            "n_samples": int(n_samples), "curve_steps": int(seed_curve.steps),
            "curve_length": seed_curve.length}

    def run(chunk):
        return _cloud_measure(sys, chunk, n, burn_in, bins, observables, meta)[0]

    parts = ordered_map(run, [s for s in shards if len(s)], threads)
    return _merge_all(parts, meta)


def _merge_all(parts, meta):
    out = parts[0]
    for p in parts[1:]:
        out = out.merge(p)
    out.metadata = dict(meta, shards=len(parts))
    return out


def orbit_cloud_measure(sys: SystemSpec, n_orbits: int, n: int, burn_in: int = DEFAULT_BURN_IN,
                        bins=DEFAULT_BINS, observables=DEFAULT_OBS, seed: int = 0,
                        n_shards: int = 8, threads: int | None = 1) -> EmpiricalMeasure3:
    """Histogram of n_orbits Lebesgue-random orbits, steps burn_in <= i < n."""
    counts = split_counts(n_orbits, n_shards)
    seeds = spawn_seeds(seed, n_shards)
    meta = {"source": "orbit_cloud", "n": int(n), "burn_in": int(burn_in),
            "n_orbits": int(n_orbits), "seed": int(seed)}

    def run(i):
        rng = np.random.default_rng(seeds[i])
        return _cloud_measure(sys, rng.random((counts[i], 3)), n, burn_in, bins, observables, meta)[0]

    parts = ordered_map(run, [i for i in range(n_shards) if counts[i] > 0], threads)
    return _merge_all(parts, meta)


def node_cloud_average(sys: SystemSpec, pts, obs, n: int, burn_in: int) -> float:
    """Reference computation: per-point orbit sums, then the sample mean.

    Sums in a different order from the histogram accumulator, so it is an
    independent check of the Cesaro moments.
    """
    ob = Observable.parse(obs)
    codes, op = _pack_obs([ob])
    pts = np.ascontiguousarray(pts, dtype=float)
    tot = 0.0
    for p in pts:
        mean, _ = MK.birkhoff(sys.params, p[0], p[1], p[2], codes, op, int(n - burn_in), int(burn_in), 1)
        tot += mean[0] * (n - burn_in)
    return tot / (len(pts) * (n - burn_in))
