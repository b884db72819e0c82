import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewlab.cocycle import unstable_slopes
from skewlab.errors import AssumptionError, NodeCapError
from skewlab.torus_systems import (FiberSpec, RotationSpec, SystemSpec, coupled_apply,
                                   fiber_deriv, lift_delta)
from skewlab.unstable_curves import (cc_integral, cc_sufficient_lhs, cc_sufficient_terms,
                                     distortion_bound, evolve_and_refine, fundamental_domains,
                                     rho_density, seed_unstable_segment, write_curve_csv)

REF = SystemSpec.build(10, FiberSpec.projective(0.4))


@pytest.fixture(scope="module")
def grown():
    c = seed_unstable_segment(REF, [0.3, 0.6, 0.2], 0.05, h_max=0.05)
    return evolve_and_refine(REF, c, 4)


def torus_err(a, b):
    return np.abs(lift_delta(a, b)).max()


def test_seed_geometry():
    c = seed_unstable_segment(REF, [0.3, 0.6, 0.2], 0.01, h_max=1e-3)
    assert c.length == pytest.approx(0.01, rel=1e-12)
    assert c.spacing.max() <= 1e-3
    assert c.steps == 0 and c.depth >= 4
    # the centre node sits on the (snapped) seed point
    mid = c.evaluate([0.0])[0]
    assert torus_err(mid, [0.3, 0.6, 0.2]) < 1e-11


@settings(max_examples=15, deadline=None)
@given(p=st.tuples(*[st.floats(0, 1, exclude_max=True)] * 3))
def test_curve_is_forward_invariant(p):
    c = seed_unstable_segment(REF, p, 0.01, h_max=1e-2)
    c1 = evolve_and_refine(REF, c, 1)
    assert torus_err(coupled_apply(REF, c.points), c1.evaluate(c.t)) < 1e-12
    assert c1.spacing.max() <= 1e-2


def test_curve_tangent_is_unstable_direction():
    c = evolve_and_refine(REF, seed_unstable_segment(REF, [0.7, 0.1, 0.4], 0.002, h_max=1e-5), 1)
    mids = c.evaluate(0.5 * (c.t[1:] + c.t[:-1]))
    s = unstable_slopes(REF, mids[::50])
    assert np.abs(c.tangent_slopes()[::50] - s).max() < 1e-6


def test_node_cap():
    c = seed_unstable_segment(REF, [0.3, 0.6, 0.2], 0.05, h_max=1e-3, node_cap=10_000)
    with pytest.raises(NodeCapError):
        evolve_and_refine(REF, c, 3)


def test_curves_need_the_skew_product_and_dominance():
    with pytest.raises((ValueError, AssumptionError)):
        seed_unstable_segment(REF.replace(delta=1e-3), [0.1, 0.2, 0.3], 0.01)
    with pytest.raises(AssumptionError):
        seed_unstable_segment(SystemSpec.build(2, FiberSpec.projective(0.25)), [0.1, 0.2, 0.3], 0.01)


def test_fundamental_domains_span_one_turn(grown):
    doms = fundamental_domains(grown)
    assert len(doms) >= 20
    for a, b in zip(doms, doms[1:]):
        assert b.t_lo == a.t_hi and b.k == a.k + 1
    spans = np.array([d.span for d in doms])
    assert np.abs(spans - 1.0).max() < 1e-12
    ends = grown.evaluate(np.array([d.t_lo for d in doms]))
    assert np.abs(lift_delta(ends[:, 2], REF.fiber.z_a)).max() < 1e-12


def test_density_uncoupled_is_constant():
    sys = SystemSpec.build(10, FiberSpec.projective(0.4), RotationSpec.zero())
    c = seed_unstable_segment(sys, [0.2, 0.3, 0.0], 0.3, h_max=0.01)
    c = evolve_and_refine(sys, c, 1, h_max=0.05)
    prof = rho_density(sys, c)
    assert np.ptp(prof.rho) / prof.rho.mean() < 1e-10
    assert prof.rho.mean() * c.arclength == pytest.approx(1.0, rel=1e-12)
    assert distortion_bound(prof, 0.1) == pytest.approx(1.0, abs=1e-10)


def test_density_weights_and_truncation(grown):
    p40 = rho_density(REF, grown, n_trunc=40)
    p60 = rho_density(REF, grown, n_trunc=60)
    assert p40.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(p40.rho > 0)
    assert np.abs(p40.rho / p60.rho - 1).max() < 1e-9
    assert distortion_bound(p40, 0.0) == 1.0
    assert distortion_bound(p40, 0.5) >= distortion_bound(p40, 0.05) >= 1.0


def test_pushforward_identity():
    c = evolve_and_refine(REF, seed_unstable_segment(REF, [0.3, 0.6, 0.2], 0.01), 1)
    fw = evolve_and_refine(REF, c, 1)
    w = c.resampled(fw.t, c.steps)
    pw, pf = rho_density(REF, w), rho_density(REF, fw)
    img = coupled_apply(REF, w.points)
    for phi in (lambda q: np.cos(2 * np.pi * q[:, 2]),
                lambda q: np.sin(2 * np.pi * (q[:, 0] + q[:, 1])) * np.cos(2 * np.pi * q[:, 2])):
        assert pw.integrate(phi(img)) == pytest.approx(pf.integrate(phi(fw.points)), abs=1e-6)


def test_cc_integral_uniform_mode_closed_forms():
    for fib, want in [(FiberSpec.sine(0.6), math.log(0.9)),
                      (FiberSpec.projective(0.4), math.log(1.6 / 1.96))]:
        sys = SystemSpec.build(10, fib)
        c = evolve_and_refine(sys, seed_unstable_segment(sys, [0.3, 0.6, 0.2], 0.05, h_max=0.05), 3)
        d = fundamental_domains(c)[2]
        assert cc_integral(sys, d, uniform=True) == pytest.approx(want, abs=1e-9)


def test_cc_integral_node_convergence(grown):
    d = fundamental_domains(grown)[3]
    a, b = cc_integral(REF, d, 4096), cc_integral(REF, d, 8192)
    assert abs(a - b) < 1e-10
    val, prof = cc_integral(REF, d, 1024, return_profile=True)
    assert val < 0 and prof.weights.sum() == pytest.approx(1.0)


def _oracle_terms(lam, n=10 ** 6):
    """Midpoint rule for the pieces of the sufficient condition, projective family."""
    zs = math.acos(math.sqrt(lam / (1 + lam))) / math.pi
    z = (np.arange(n) + 0.5) / n
    lg = np.log(lam / (np.cos(np.pi * z) ** 2 + lam ** 2 * np.sin(np.pi * z) ** 2))
    plus = (z > zs) & (z < 1 - zs)
    return zs, lg[plus].sum() / n, lg[~plus].sum() / n


def test_cc_sufficient_terms_against_oracle():
    t = cc_sufficient_terms(REF)
    zs, ip, im = _oracle_terms(0.4)
    assert t["z_star"] == pytest.approx(zs, abs=1e-12)
    assert fiber_deriv(REF.fiber, t["z_star"]) == pytest.approx(1.0, abs=1e-12)
    # the oracle's cut error is O(1/n) times |log g'(z*)| = 0
    assert t["int_plus"] == pytest.approx(ip, abs=1e-6)
    assert t["int_minus"] == pytest.approx(im, abs=1e-6)
    assert t["int_plus"] + t["int_minus"] == pytest.approx(math.log(1.6 / 1.96), abs=1e-12)
    e = REF.eigen
    assert t["bracket"] == pytest.approx((1 / e.beta) * (1 + 5 / (e.alpha_u - 2.5)), rel=1e-14)


def test_cc_sufficient_regression_values():
    # frozen after agreement with the midpoint oracle above
    t = cc_sufficient_terms(REF)
    assert t["z_star"] == pytest.approx(0.320491482014312, abs=1e-13)
    assert t["int_plus"] == pytest.approx(0.19350508507944492, abs=1e-12)
    assert t["int_minus"] == pytest.approx(-0.3964459290761351, abs=1e-12)
    assert cc_sufficient_lhs(REF) == pytest.approx(-0.08630574904885197, abs=1e-12)


def test_cc_sufficient_can_fail():
    sys = SystemSpec.build(2, FiberSpec.projective(0.5))
    assert cc_sufficient_lhs(sys) >= 0


def test_curve_csv(tmp_path, grown):
    small = grown.resampled(grown.t[:50])
    prof = rho_density(REF, small)
    p = tmp_path / "curve.csv"
    write_curve_csv(small, p, prof)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["param", "x", "y", "z", "lifted_z", "rho"]
    assert len(rows) == 51
    assert float(rows[1][5]) == prof.rho[0]


def test_monotone_winding_and_cone_slopes(grown):
    from skewlab.cocycle import cone_params
    assert np.all(np.diff(grown.lifted_z) > 0)
    c = cone_params(REF)
    s = grown.tangent_slopes()
    assert s.min() >= c.b * 0.95 and s.max() <= c.a * 1.05


def test_base_length_grows_by_alpha_u():
    c = seed_unstable_segment(REF, [0.5, 0.5, 0.5], 0.001, h_max=0.01)
    for k in range(1, 4):
        ck = evolve_and_refine(REF, c, k)
        assert ck.length == pytest.approx(0.001 * REF.eigen.alpha_u ** k, rel=1e-12)
        assert len(ck) >= math.ceil(ck.arclength / 0.01)


def test_domain_count_follows_span(grown):
    doms = fundamental_domains(grown)
    lz = grown.lifted_z - REF.fiber.z_a
    assert len(doms) == math.floor(lz[-1]) - math.ceil(lz[0])
    short = seed_unstable_segment(REF, [0.3, 0.6, 0.2], 0.01)
    assert short.z_span < 1 and fundamental_domains(short) == []


def test_uncoupled_seed_is_flat():
    sys = SystemSpec.build(2, FiberSpec.sine(0.5), RotationSpec.zero())
    c = seed_unstable_segment(sys, [0.2, 0.3, 0.0], 0.2, h_max=0.01)
    assert np.all(c.points[:, 2] == 0.0)
    prof = rho_density(sys, c)
    assert np.allclose(prof.rho, 1 / c.length, rtol=1e-12)


def test_distortion_stable_under_refinement(grown):
    d = fundamental_domains(grown)[1]
    t = np.linspace(d.t_lo, d.t_hi, 2001)
    k1 = distortion_bound(rho_density(REF, grown.resampled(t)), 0.05)
    k2 = distortion_bound(rho_density(REF, grown.resampled(np.linspace(d.t_lo, d.t_hi, 4001))), 0.05)
    assert 1.0 <= k1 < 10 and abs(k1 - k2) / k1 < 1e-2


def test_cc_sufficient_limits_and_monotonicity():
    # to first order in kappa the integrals are +-kappa/pi, so the value
    # behaves like (bracket - 1) kappa / pi and tends to 0 from above
    for kappa in (0.01, 0.001):
        t = cc_sufficient_terms(SystemSpec.build(10, FiberSpec.sine(kappa)))
        assert t["lhs"] > 0
        assert t["lhs"] == pytest.approx((t["bracket"] - 1) * kappa / math.pi, rel=0.05)
    lin = cc_sufficient_lhs(REF)
    wavy = cc_sufficient_lhs(REF.replace(rotation=RotationSpec.smooth(0.2)))
    assert wavy > lin
