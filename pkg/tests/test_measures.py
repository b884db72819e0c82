import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from skewlab.measures import (DEFAULT_OBS, EmpiricalMeasure3, Observable, base_marginal,
                              base_uniformity_tv, birkhoff_average, cesaro_pushforward,
                              fiber_marginal, mass_outside_interval, mu_w_quantile_points,
                              node_cloud_average, orbit_cloud_measure, write_marginals_csv)
from skewlab.parallel import ordered_map, spawn_seeds, split_counts
from skewlab.torus_systems import FiberSpec, RotationSpec, SystemSpec, coupled_apply
from skewlab.unstable_curves import evolve_and_refine, rho_density, seed_unstable_segment

REF = SystemSpec.build(10, FiberSpec.projective(0.4))
UNC = SystemSpec.build(2, FiberSpec.sine(0.5), RotationSpec.zero())
points = arrays(np.float64, st.tuples(st.integers(1, 60), st.just(3)),
                elements=st.floats(0, 1, exclude_max=True))


def hist(pts, bins=(4, 4, 4)):
    m = EmpiricalMeasure3.empty(bins)
    m.add_points(pts)
    return m


# observables

def test_observables_match_formulas():
    p = np.random.default_rng(0).random((100, 3))
    x, y, z = p.T
    tau = 2 * np.pi
    want = {"cos_x": np.cos(tau * x), "sin_y": np.sin(tau * y), "cos_z": np.cos(tau * z),
            "cos_x_cos_z": np.cos(tau * x) * np.cos(tau * z),
            "sin_xy_cos_z": np.sin(tau * (x + y)) * np.cos(tau * z)}
    for k, v in want.items():
        assert np.allclose(Observable(k)(p), v, atol=1e-15)
    d = np.abs(z - 0.9)
    d = np.minimum(d, 1 - d)
    ind = Observable("ind_z", 0.9, 0.2)(p)
    assert np.array_equal(ind, (d < 0.2).astype(float))
    assert np.array_equal(Observable("out_z", 0.9, 0.2)(p), 1 - ind)
    with pytest.raises(ValueError):
        Observable("cos_w")


# histograms

@given(points, points)
def test_merge_is_exact_concatenation(a, b):
    m = hist(a).merge(hist(b))
    ref = hist(np.vstack([a, b]))
    assert np.array_equal(m.counts, ref.counts)
    assert m.total_weight == ref.total_weight == len(a) + len(b)


@given(points, points, points)
def test_merge_associative(a, b, c):
    l = hist(a).merge(hist(b)).merge(hist(c))
    r = hist(a).merge(hist(b).merge(hist(c)))
    assert np.array_equal(l.counts, r.counts)


@given(points)
def test_binary_round_trip(a):
    m = hist(a, (3, 5, 7))
    m.moments = {"cos_z": 0.25}
    m.metadata = {"source": "test"}
    back = EmpiricalMeasure3.from_bytes(m.to_bytes())
    assert np.array_equal(back.counts, m.counts) and back.bins == (3, 5, 7)
    assert back.moments == m.moments and back.metadata == m.metadata
    assert back.n_samples == m.n_samples and back.total_weight == m.total_weight


def test_binary_rejects_garbage(tmp_path):
    with pytest.raises(ValueError):
        EmpiricalMeasure3.from_bytes(b"not a histogram")
    p = tmp_path / "h.skh"
    hist(np.random.default_rng(1).random((10, 3))).save(p)
    assert EmpiricalMeasure3.load(p).n_samples == 10


def test_merge_rejects_other_bins():
    with pytest.raises(ValueError):
        hist(np.zeros((1, 3)), (2, 2, 2)).merge(hist(np.zeros((1, 3)), (4, 4, 4)))


def test_marginals_and_distances():
    g = (np.arange(8) + 0.5) / 8
    pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
    m = hist(pts, (8, 8, 8))
    assert base_uniformity_tv(m) == 0.0
    assert np.all(fiber_marginal(m) == 64)
    assert base_marginal(m, normalized=True).sum() == pytest.approx(1.0)
    # bin centres (k + 1/2)/8 at distance >= 0.2 from 0: k = 2..5
    assert mass_outside_interval(m, 0.0, 0.2) == pytest.approx(0.5)
    pt = hist(np.array([[0.1, 0.1, 0.1]] * 5), (8, 8, 8))
    assert base_uniformity_tv(pt) == pytest.approx(1 - 1 / 64)


def test_integrate_bin_centres_and_moments():
    g = (np.arange(16) + 0.5) / 16
    pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
    m = hist(pts, (16, 16, 16))
    assert m.integrate("cos_z") == pytest.approx(0.0, abs=1e-14)
    assert m.integrate("one") == pytest.approx(1.0)
    m.moments["cos_z"] = 0.5 * m.total_weight
    assert m.integrate("cos_z") == 0.5


def test_marginal_csv(tmp_path):
    m = hist(np.random.default_rng(2).random((100, 3)), (4, 4, 4))
    write_marginals_csv(m, tmp_path / "f.csv", tmp_path / "b.csv")
    f = open(tmp_path / "f.csv").read().splitlines()
    assert f[0] == "z_lo,z_hi,count,mass" and len(f) == 5
    assert len(open(tmp_path / "b.csv").read().splitlines()) == 17


# Birkhoff averages

def test_birkhoff_uncoupled_fiber_converges_to_sink():
    r = birkhoff_average(UNC, [0.1, 0.2, 0.3], ["cos_z", "cos_x"], 100_000, 1000)
    assert r.mean[0] == pytest.approx(1.0, abs=1e-9)
    assert abs(r.mean[1]) < 0.02
    assert r.keys == ["cos_z", "cos_x"]


def test_birkhoff_matches_python_loop():
    n, burn = 2000, 100
    p = np.array([0.3, 0.4, 0.5])
    r = birkhoff_average(REF, p, "sin_xy_cos_z", n, burn)
    q = p.copy()
    for _ in range(burn):
        q = coupled_apply(REF, q)
    tot = 0.0
    for _ in range(n):
        tot += np.sin(2 * np.pi * (q[0] + q[1])) * np.cos(2 * np.pi * q[2])
        q = coupled_apply(REF, q)
    assert r.mean[0] == pytest.approx(tot / n, abs=1e-8)


def test_birkhoff_needs_long_runs():
    with pytest.raises(ValueError):
        birkhoff_average(REF, [0.1, 0.2, 0.3], "cos_z", 10)


# curve measures and clouds

@pytest.fixture(scope="module")
def seed_curve():
    return seed_unstable_segment(REF, [0.4, 0.7, 0.1], 0.01)


def test_quantile_points_have_equal_mass(seed_curve):
    prof = rho_density(REF, seed_curve)
    pts = mu_w_quantile_points(REF, seed_curve, 64, prof)
    assert pts.shape == (64, 3)
    # the mu_W mass between consecutive quantiles is 1/64
    t = np.interp(pts[:, 0], seed_curve.points[:, 0], seed_curve.t)
    assert np.all(np.diff(t) > 0)


def test_cesaro_moments_match_independent_sum(seed_curve):
    m = cesaro_pushforward(REF, seed_curve, 300, 100, (16, 16, 16), 64, DEFAULT_OBS, 0, 4)
    pts = mu_w_quantile_points(REF, seed_curve, 64)
    for o in ("cos_z", "sin_xy_cos_z"):
        assert m.integrate(o) == pytest.approx(node_cloud_average(REF, pts, o, 300, 100), abs=1e-12)
    assert m.n_samples == 64 * 200 and m.counts.sum() == m.n_samples
    assert m.integrate("one") == pytest.approx(1.0)


def test_cesaro_uncoupled_mass_collects_at_sink():
    c = seed_unstable_segment(UNC, [0.4, 0.7, 0.3], 0.01)
    m = cesaro_pushforward(UNC, c, 300, 200, (8, 8, 8), 64, DEFAULT_OBS, 0, 2)
    f = fiber_marginal(m, normalized=True)
    assert f[0] + f[-1] == pytest.approx(1.0)


def test_orbit_cloud_shards_independent_of_threads():
    a = orbit_cloud_measure(REF, 20, 500, 100, (8, 8, 8), DEFAULT_OBS, 3, 4, threads=1)
    b = orbit_cloud_measure(REF, 20, 500, 100, (8, 8, 8), DEFAULT_OBS, 3, 4, threads=4)
    assert a.to_bytes() == b.to_bytes()
    assert "log_central" in a.moments


# parallel helpers

@given(st.integers(0, 10_000), st.integers(1, 64))
def test_split_counts(total, n):
    c = split_counts(total, n)
    assert sum(c) == total and len(c) == n and max(c) - min(c) <= 1


def test_spawned_seeds_are_reproducible():
    a = [np.random.default_rng(s).random() for s in spawn_seeds(7, 3)]
    b = [np.random.default_rng(s).random() for s in spawn_seeds(7, 3)]
    assert a == b and len(set(a)) == 3


def test_ordered_map_keeps_order():
    assert ordered_map(lambda v: v * v, range(20), 8) == [v * v for v in range(20)]


def test_birkhoff_of_constant_is_one():
    r = birkhoff_average(REF, [0.2, 0.4, 0.6], "one", 5000)
    assert r.mean[0] == 1.0


def test_mass_outside_geometry():
    z = (np.arange(6400) + 0.5) / 6400
    pts = np.column_stack([z, z, z])
    m = hist(pts, (4, 4, 64))
    for rad in (0.1, 0.25, 0.4):
        assert abs(mass_outside_interval(m, 0.0, rad) - (1 - 2 * rad)) <= 2 / 64
    at = hist(np.array([[0.3, 0.3, 0.001]] * 10), (4, 4, 64))
    assert mass_outside_interval(at, 0.0, 0.05) == 0.0


def test_product_marginals_factor():
    rng = np.random.default_rng(12)
    m = hist(rng.random((5000, 3)), (4, 4, 8))
    p = m.probabilities()
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert fiber_marginal(m).sum() == base_marginal(m).sum() == m.counts.sum()
    flat = hist(np.array([[0.1, 0.6, z] for z in (np.arange(8) + 0.5) / 8]), (4, 4, 8))
    assert np.array_equal(flat.counts, np.einsum("ij,k->ijk", base_marginal(flat), fiber_marginal(flat)) // 8)


def test_cesaro_convergence_diagnostics():
    c = seed_unstable_segment(REF, [0.4, 0.7, 0.1], 0.01)
    a = cesaro_pushforward(REF, c, 1000, 0, (64, 64, 64), 4096, DEFAULT_OBS, 0, 4)
    b = cesaro_pushforward(REF, c, 2000, 0, (64, 64, 64), 4096, DEFAULT_OBS, 0, 4)
    assert base_uniformity_tv(a) < 0.02
    for o in DEFAULT_OBS:
        assert abs(a.integrate(o) - b.integrate(o)) < 5e-3
