import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewlab.errors import ConfigError
from skewlab.torus_systems import (AnosovSpec, FiberSpec, RotationSpec, SystemSpec,
                                   check_assumptions_A, check_assumptions_B, coupled_apply,
                                   coupled_inverse, coupled_jacobian, count_attracting_orbits,
                                   decompose_apply, fiber_deriv, fiber_eval, fiber_inverse,
                                   fiber_lift, fixed_fiber_map, lift_delta, rigid_rotation,
                                   rotation_deriv, rotation_eval, rotation_number, wrap)
from skewlab.torus_systems.assumptions import b3_accepts_minus_radius, rotation_monotone

FIBERS = [FiberSpec.sine(0.3), FiberSpec.sine(0.8), FiberSpec.projective(0.4),
          FiberSpec.projective(0.25)]
ROTATIONS = [RotationSpec.linear(), RotationSpec.smooth(0.2), RotationSpec.rare(0.1, 0.25),
             RotationSpec.zero()]


def n10():
    return SystemSpec.build(10, FiberSpec.projective(0.4))


# torus coordinates

@given(st.floats(-50, 50, allow_nan=False))
def test_wrap_range(x):
    w = wrap(x)
    assert 0.0 <= w < 1.0


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_lift_delta_half_open(a, b):
    d = lift_delta(a, b)
    assert -0.5 < d <= 0.5
    assert abs(wrap(a + d) - b) < 1e-12 or abs(abs(wrap(a + d) - b) - 1) < 1e-12


# Anosov data

def test_n10_eigendata():
    e = n10().eigen
    assert e.alpha_u == pytest.approx((11 + math.sqrt(117)) / 2, rel=1e-14)
    assert e.alpha_u == pytest.approx(10.90833, abs=1e-5)
    assert e.alpha_u * e.alpha_s == pytest.approx(1.0, rel=1e-14)
    assert e.beta == pytest.approx(0.9949, abs=1e-4)
    assert e.du[0] > 0 and e.ds[0] < 0


@pytest.mark.parametrize("n", [2, 3, 10, 40])
def test_unstable_direction_formula(n):
    # expanding direction parallel to ((N-1+sqrt((N-1)(N+3)))/2, 1)
    v = np.array([(n - 1 + math.sqrt((n - 1) * (n + 3))) / 2, 1.0])
    v /= np.linalg.norm(v)
    du = np.asarray(AnosovSpec.family(n).eigen.du)
    assert np.abs(du - v).max() < 1e-12


def test_anosov_rejects_bad_matrices():
    with pytest.raises(ConfigError):
        AnosovSpec(2, 1, 1, 2)      # det 3
    with pytest.raises(ConfigError):
        AnosovSpec(1, 1, 0, 1)      # parabolic


def test_operator_norm_linear():
    a = AnosovSpec.family(2)
    assert a.operator_norm == pytest.approx(float(np.linalg.norm(a.matrix, 2)))
    assert a.operator_norm == pytest.approx(2.618034, abs=1e-6)


# fiber maps

def test_fiber_fixed_point_derivatives():
    assert fiber_deriv(FiberSpec.sine(0.6), 0.0) == pytest.approx(0.4)
    assert fiber_deriv(FiberSpec.sine(0.6), 0.5) == pytest.approx(1.6)
    assert fiber_deriv(FiberSpec.projective(0.4), 0.0) == pytest.approx(0.4)
    assert fiber_deriv(FiberSpec.projective(0.4), 0.5) == pytest.approx(2.5)


@pytest.mark.parametrize("fib", FIBERS)
def test_fiber_fixed_points(fib):
    assert fiber_eval(fib, fib.z_a) == pytest.approx(fib.z_a, abs=1e-15)
    assert fiber_eval(fib, fib.z_r) == pytest.approx(fib.z_r, abs=1e-15)
    z = np.linspace(0, 1, 10001)[1:-1]
    z = z[np.abs(z - 0.5) > 1e-9]
    # no other fixed points: displacement has constant sign on each side
    d = fiber_lift(fib, z) - z
    assert np.all(d[z < 0.5] < 0) and np.all(d[z > 0.5] > 0)


def test_projective_derivative_closed_form():
    lam = 0.4
    z = np.linspace(0, 1, 2001)[:-1]
    z = z[np.abs(z - 0.5) > 1e-3]
    t = np.tan(np.pi * z)
    want = lam * (1 + t * t) / (1 + lam * lam * t * t)
    assert np.abs(fiber_deriv(FiberSpec.projective(lam), z) - want).max() < 1e-12


@pytest.mark.parametrize("fib", FIBERS)
def test_fiber_derivative_matches_finite_difference(fib):
    z = np.linspace(0.01, 0.99, 400)
    h = 1e-6
    fd = (fiber_lift(fib, z + h) - fiber_lift(fib, z - h)) / (2 * h)
    assert np.abs(fd - fiber_deriv(fib, z)).max() < 1e-6


@pytest.mark.parametrize("fib", FIBERS)
@settings(max_examples=200, deadline=None)
@given(z=st.floats(0, 1, exclude_max=True))
def test_fiber_inverse_round_trip(fib, z):
    w = fiber_inverse(fib, fiber_eval(fib, z))
    assert abs(lift_delta(w, z)) < 1e-12


@pytest.mark.parametrize("fib", FIBERS)
def test_fiber_lift_degree_one(fib):
    z = np.linspace(0, 1, 10_001)
    lz = fiber_lift(fib, z)
    assert np.all(np.diff(lz) > 0)
    assert lz[-1] - lz[0] == pytest.approx(1.0, abs=1e-13)


def test_jensen_negative_mean_log_derivative():
    # mean of log g' is negative for non-rigid g; closed form for the projective family
    z = (np.arange(200_000) + 0.5) / 200_000
    for lam in (0.25, 0.4, 0.7):
        m = np.log(fiber_deriv(FiberSpec.projective(lam), z)).mean()
        assert m < 0
        assert m == pytest.approx(math.log(4 * lam / (1 + lam) ** 2), abs=1e-9)


# rotations

def test_rare_rotation_profile():
    eps, x0 = 0.1, 0.25
    rot = RotationSpec.rare(eps, x0)
    assert rotation_eval(rot, x0) == 0.0
    assert abs(lift_delta(0.0, rotation_eval(rot, x0 + eps))) < 1e-12
    assert rotation_eval(rot, x0 + eps - 1e-9) == pytest.approx(1.0, abs=1e-12)
    assert rot.c_hi == pytest.approx(1.875 / eps)
    assert rotation_deriv(rot, x0 + eps / 2) == pytest.approx(1.875 / eps, rel=1e-12)
    x = np.linspace(0, 1, 20001)[:-1]
    assert rotation_deriv(rot, x).max() <= 1.875 / eps * (1 + 1e-12)
    off = (x < x0) | (x > x0 + eps)
    assert np.all(rotation_eval(rot, x[off]) == 0.0)


def test_rare_gluing_is_c2():
    eps, x0 = 0.2, 0.25
    rot = RotationSpec.rare(eps, x0)
    h = 1e-4
    # r' vanishes to second order on both sides of each gluing point, so r'' is continuous there
    for p in (x0, x0 + eps):
        inner = p + h if p == x0 else p - h
        outer = p - h if p == x0 else p + h
        ratio = rotation_deriv(rot, 2 * inner - p) / rotation_deriv(rot, inner)
        assert ratio == pytest.approx(4.0, rel=1e-2)
        assert rotation_deriv(rot, wrap(outer)) == 0.0


def test_smooth_rotation_bounds():
    rot = RotationSpec.smooth(0.2)
    assert rot.c_lo == pytest.approx(0.8)
    assert rot.c_hi == pytest.approx(1.2)


@pytest.mark.parametrize("rot", ROTATIONS[:3])
def test_rotation_monotone_degree_one(rot):
    assert rotation_monotone(SystemSpec.build(2, FiberSpec.projective(0.4), rot))


@pytest.mark.parametrize("rot", ROTATIONS[:3])
def test_rotation_derivative_matches_finite_difference(rot):
    x = np.linspace(0.013, 0.987, 500)
    h = 1e-6
    r1, r0 = rotation_eval(rot, x + h), rotation_eval(rot, x - h)
    fd = lift_delta(r0, r1) / (2 * h)
    assert np.abs(fd - rotation_deriv(rot, x)).max() < 1e-5 * max(1.0, rot.c_hi)


# coupled map

@pytest.mark.parametrize("fib", FIBERS)
@pytest.mark.parametrize("rot", ROTATIONS)
def test_inverse_round_trip(fib, rot):
    sys = SystemSpec.build(3, fib, rot)
    p = np.random.default_rng(1).random((10_000, 3))
    q = coupled_inverse(sys, coupled_apply(sys, p))
    d = np.abs(p - q)
    d = np.minimum(d, 1 - d)
    assert d.max() < 1e-10


@pytest.mark.parametrize("delta,feedback", [(0.0, True), (1e-3, True), (1e-3, False)])
@pytest.mark.parametrize("rot", ROTATIONS)
def test_jacobian_matches_finite_differences(rot, delta, feedback):
    sys = SystemSpec.build(2, FiberSpec.sine(0.5), rot, delta, feedback)
    p = np.random.default_rng(2).random((1000, 3)) * 0.98 + 0.01
    jac = coupled_jacobian(sys, p)
    h = 1e-6
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        fd = lift_delta(coupled_apply(sys, p - e), coupled_apply(sys, p + e)) / (2 * h)
        rel = np.abs(fd - jac[:, :, k]).max() / max(1.0, np.abs(jac[:, :, k]).max())
        assert rel < 1e-6


def test_skew_jacobian_zero_entries():
    sys = n10()
    jac = coupled_jacobian(sys, np.random.default_rng(3).random((500, 3)))
    assert np.all(jac[:, 0, 2] == 0.0) and np.all(jac[:, 1, 2] == 0.0)


def test_decomposition_composes_to_map():
    sys = n10()
    p = np.random.default_rng(4).random((200, 3))
    f1, f2, f3 = decompose_apply(sys, p)
    assert np.abs(lift_delta(f3, coupled_apply(sys, p))).max() < 1e-12
    # f1 only moves the fiber, f2 only applies g
    assert np.all(f1[:, :2] == p[:, :2])
    assert np.abs(lift_delta(f2[:, 2], fiber_eval(sys.fiber, f1[:, 2]))).max() < 1e-15


def test_perturbation_validity():
    with pytest.raises(ConfigError):
        SystemSpec.build(2, FiberSpec.sine(0.5), delta=0.5)
    with pytest.raises(ConfigError):
        SystemSpec.build(2, FiberSpec.sine(0.5), delta=-1e-3)
    sys = SystemSpec.build(2, FiberSpec.sine(0.5), delta=1e-3)
    assert not sys.is_skew
    assert sys.replace(feedback=False).is_skew


def test_system_json_round_trip():
    for rot in ROTATIONS:
        sys = SystemSpec.build(10, FiberSpec.projective(0.4), rot)
        back = SystemSpec.from_json(sys.to_json())
        assert back == sys
        assert np.array_equal(back.params, sys.params)
    d = n10().to_dict()
    d["fiber"]["family"] = "cubic"
    with pytest.raises(ConfigError):
        SystemSpec.from_dict(json.loads(json.dumps(d)))


# assumptions

def test_assumptions_A_reference():
    rep = check_assumptions_A(n10())
    assert rep.passed, rep.to_dict()
    assert [c.name for c in rep.clauses] == ["A1", "A2", "A3"]


def test_assumptions_A_fail_without_rotation():
    rep = check_assumptions_A(n10().replace(rotation=RotationSpec.zero()))
    assert not rep.passed and "A2" in rep.failures()


def test_assumptions_A_fail_when_fiber_expands_too_much():
    # lam_max = 4 exceeds alpha_u = 2.618 for N = 2
    rep = check_assumptions_A(SystemSpec.build(2, FiberSpec.projective(0.25)))
    assert "A1" in rep.failures()


def test_assumptions_B_rare_reference():
    for eps in (0.4, 0.2, 0.1, 0.05):
        rep = check_assumptions_B(SystemSpec.build(2, FiberSpec.projective(0.25),
                                                   RotationSpec.rare(eps, 0.25)))
        assert rep.passed, rep.failures()
        assert b3_accepts_minus_radius(rep, 0.1)
    b1 = rep.clause("B1")
    assert b1.values["lam_max"] == pytest.approx(4.0) and b1.values["max_norm_DA"] == pytest.approx(2.618034, abs=1e-6)


def test_assumptions_B1_fails_for_sine():
    rep = check_assumptions_B(SystemSpec.build(2, FiberSpec.sine(0.5), RotationSpec.rare(0.1)))
    assert not rep.clause("B1").passed


def test_assumption_reports_deterministic():
    a = check_assumptions_B(SystemSpec.build(2, FiberSpec.projective(0.25), RotationSpec.rare(0.1)))
    b = check_assumptions_B(SystemSpec.build(2, FiberSpec.projective(0.25), RotationSpec.rare(0.1)))
    assert json.dumps(a.to_dict(), sort_keys=True, default=str) == json.dumps(b.to_dict(), sort_keys=True, default=str)


# circle maps over the fixed point

def test_fixed_fiber_map_is_g():
    sys = n10()
    cm = fixed_fiber_map(sys)
    assert rotation_number(cm, 1000) == 0.0
    oc = count_attracting_orbits(cm)
    assert oc.count == 1 and oc.period == 1


def test_rigid_rotation_number():
    assert rotation_number(rigid_rotation(0.5), 10_000) == pytest.approx(0.5, abs=1e-12)


def test_shifted_projective_rotation_number_self_consistent():
    fib = FiberSpec.projective(0.4)
    from skewlab.torus_systems import CircleMap
    cm = CircleMap(lambda z: fiber_lift(fib, np.asarray(z) + 0.5),
                   lambda z: fiber_deriv(fib, wrap(np.asarray(z) + 0.5)))
    a, b = rotation_number(cm, 10_000), rotation_number(cm, 100_000)
    assert 0.0 <= a < 1.0
    assert abs(a - b) < 1e-3
