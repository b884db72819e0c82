"""Coupled torus maps F(x, y, z) = (A(x, y), g(z + r(x))) and their hypotheses."""
from .spec import (SCHEMA_SYSTEM, AnosovSpec, Eigendata, FiberSpec, RotationSpec,
                   SystemSpec, perturbation_det_ratio)
from .maps import (coupled_apply, coupled_inverse, coupled_jacobian, decompose_apply,
                   eigendata, fiber_deriv, fiber_eval, fiber_inverse, fiber_lift,
                   lift_delta, random_points, rotation_deriv, rotation_eval,
                   torus_distance, wrap)
from .assumptions import (AssumptionReport, Clause, b3_witnesses, check_assumptions_A,
                          check_assumptions_B)
from .circle import (CircleMap, OrbitCount, count_attracting_orbits, fixed_fiber_map,
                     rigid_rotation, rotation_number)
