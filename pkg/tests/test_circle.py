import logging
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from rotor_annulus.circle import (
    BaseState,
    Sheet,
    USet,
    base_step,
    base_step_inverse,
    build_circle,
    classify_gamma,
    classify_value,
    compute_U,
    cos_half_gamma,
    gamma_closed_form,
    outer_normal_sq,
    rescaled_at,
    s_of_velocity,
    u_reflection_error,
    velocity_of_s,
)
from rotor_annulus.collisions import inner_collision_double, outer_collision_double
from rotor_annulus.core import Integrals, Mode, PhysicalParams
from rotor_annulus.errors import EmptyCircle, InvalidState, OffCircle


def test_plane_through_origin(double_rational):
    p, ints = double_rational
    c = build_circle(p, ints)
    assert np.allclose(c.center, 0.0)
    assert c.radius == pytest.approx(1.0)
    assert c.gamma_norm == pytest.approx(1 / 3, abs=1e-15)


def test_empty_circle():
    with pytest.raises(EmptyCircle):
        build_circle(PhysicalParams(0.5, 1.0, 1.0), Integrals(3.0, 1.0, 8.0))


def test_near_degenerate_warns(caplog):
    N = math.sqrt(3) * (1 - 1e-9)
    with caplog.at_level(logging.WARNING):
        c = build_circle(PhysicalParams(0.5, 1.0, 1.0), Integrals(N, 1.0, 8.0))
    assert c.radius < 1e-4
    assert "near-degenerate" in caplog.text


def test_anchor_and_roundtrip(double_irrational):
    p, ints = double_irrational
    c = build_circle(p, ints)
    assert abs((s_of_velocity(c.anchor, c) + 0.5) % 1.0 - 0.5) < 1e-15
    s = np.random.default_rng(4).uniform(size=10_000)
    back = np.array([s_of_velocity(v, c) for v in velocity_of_s(s, c).T])
    assert np.max(np.abs(np.mod(back - s + 0.5, 1.0) - 0.5)) < 1e-12


def test_off_circle_rejected(double_irrational):
    p, ints = double_irrational
    c = build_circle(p, ints)
    with pytest.raises(OffCircle):
        s_of_velocity(c.anchor * 1.01, c)


def test_collisions_act_as_reflections(double_irrational):
    p, ints = double_irrational
    c = build_circle(p, ints)
    for s in np.random.default_rng(5).uniform(size=50):
        v = rescaled_at(s, c, p, ints.F)
        out = s_of_velocity(outer_collision_double(v, p), c)
        assert abs((out - (-s) % 1.0 + 0.5) % 1.0 - 0.5) < 1e-12
        inn = s_of_velocity(inner_collision_double(v, p), c)
        assert abs((inn - (-s - c.gamma_norm) % 1.0 + 0.5) % 1.0 - 0.5) < 1e-12


def test_gamma_closed_form_random():
    rng = np.random.default_rng(6)
    for e1, e2 in rng.uniform(0.05, 20.0, (100, 2)):
        p = PhysicalParams(0.5, e1, e2)
        c = build_circle(p, Integrals(0.1, 1.0, 8.0))
        assert math.cos(math.pi * c.gamma_norm) == pytest.approx(cos_half_gamma(p), abs=1e-12)
        assert c.gamma_norm == pytest.approx(gamma_closed_form(p), abs=1e-12)


def test_u_empty_and_nonempty():
    p = PhysicalParams(0.5, 1.0, 1.0)
    ints = Integrals(0.0, 1.0, 8.0)
    assert compute_U(build_circle(p, ints), p, ints).empty
    ints = Integrals(0.0, 1.0, 1.01)
    c = build_circle(p, ints)
    U = compute_U(c, p, ints)
    assert not U.empty
    assert u_reflection_error(U, c.gamma_norm) < 1e-10


def test_u_matches_brute_force(double_partial_u):
    p, ints = double_partial_u
    c = build_circle(p, ints)
    U = compute_U(c, p, ints)
    s = np.random.default_rng(7).uniform(size=10**5)
    x, y, z = c.point(s)
    w2 = outer_normal_sq(s, c, p, ints.F)
    misses = (1 - p.R**2) * z * z >= p.R**2 * w2
    far = U.boundary_distance(s) > 1e-9
    assert np.array_equal(U.contains(s)[far], misses[far])
    assert u_reflection_error(U, c.gamma_norm) < 1e-10


def test_uset_basics():
    U = USet(((0.9, 0.2),))
    assert U.contains(0.95) and U.contains(0.05) and not U.contains(0.5)
    assert U.measure == pytest.approx(0.2)
    assert U.boundary_distance(0.0) == pytest.approx(0.1)
    full = USet(((0.0, 1.0),))
    assert full.full and full.contains(0.3)


def test_base_step_examples(double_rational):
    p, ints = double_rational
    c = build_circle(p, ints)
    U = USet()
    b = base_step(BaseState(0.0, Sheet.O), c, U)
    assert b.sheet is Sheet.I and b.s == pytest.approx(1 - c.gamma_norm)
    b = base_step(BaseState(0.3, Sheet.I), c, U)
    assert b.sheet is Sheet.O and b.s == pytest.approx(0.7)
    b2 = base_step(base_step(BaseState(0.1, Sheet.O), c, U), c, U)
    assert b2.sheet is Sheet.O and b2.s == pytest.approx((0.1 + c.gamma_norm) % 1)


def test_base_step_inverse(double_partial_u):
    p, ints = double_partial_u
    c = build_circle(p, ints)
    U = compute_U(c, p, ints)
    for s in np.random.default_rng(8).uniform(size=200):
        b = BaseState(s, Sheet.O)
        back = base_step_inverse(base_step(b, c, U), c, U)
        assert back.sheet is b.sheet and back.s == pytest.approx(b.s, abs=1e-12)
    inside = U.arcs[0][0] + 0.5 * U.arcs[0][1]
    with pytest.raises(InvalidState):
        base_step(BaseState(inside, Sheet.I), c, U)


def test_classification_examples():
    g = classify_gamma(PhysicalParams(0.5, 1.0, 1.0))
    assert g.label == "Rational(1/3)" and g.fraction == Fraction(1, 3)
    g = classify_gamma(PhysicalParams(0.5, 1.0, 2.0))
    assert g.kind != "rational"
    assert g.gamma == pytest.approx(math.acos(1 / math.sqrt(3)) / math.pi)
    g = classify_gamma(PhysicalParams(0.5, 1.0, mode=Mode.TWO_PARTICLE))
    assert g.label == "Rational(1/3)"


def test_classification_silver_ratio_inertia():
    # eta = 1 + sqrt(2) gives cos(pi gamma) = 1/sqrt(2), so gamma = 1/4
    eta = 1 + math.sqrt(2)
    g = classify_gamma(PhysicalParams(0.5, eta, eta))
    assert g.label == "Rational(1/4)"


def test_classify_liouville_like():
    with mpmath.workdps(80):
        x = sum(mpmath.mpf(10) ** -math.factorial(k) for k in range(1, 5))
        assert classify_value(x).kind == "liouville-like"
        assert classify_value(mpmath.sqrt(2) - 1).kind == "diophantine-like"


def test_u_sharp_threshold():
    # U is nonempty iff F - E < (R^-2 - 1) max(x^2 + z^2) over the circle
    rng = np.random.default_rng(9)
    for e1, e2, N in zip(rng.uniform(0.2, 5, 10), rng.uniform(0.2, 5, 10), rng.uniform(-0.8, 0.8, 10)):
        p = PhysicalParams(0.5, e1, e2)
        c = build_circle(p, Integrals(N, 1.0, 8.0))
        x, _, z = c.point(np.arange(1 << 16) / (1 << 16))
        lam = 1.0 + (p.R**-2 - 1.0) * float(np.max(x * x + z * z))
        assert lam <= 1.0 / p.R**2
        assert not compute_U(c, p, Integrals(N, 1.0, lam - 1e-4)).empty
        assert compute_U(c, p, Integrals(N, 1.0, lam + 1e-4)).empty
        assert compute_U(c, p, Integrals(N, 1.0, 7.0 + 1e-3)).empty
