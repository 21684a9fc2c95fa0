import math

import numpy as np
import pytest

from rotor_annulus.circle import BaseState, Sheet, USet, build_circle, compute_U
from rotor_annulus.errors import ConventionViolated, NonAlternating
from rotor_annulus.geometry import beta_hat
from rotor_annulus.oracle import OracleParams, Section, double_rotor_state, extract_poincare, run
from rotor_annulus.skew import (
    SkewState,
    alpha_degree,
    alpha_monotonicity_scan,
    alpha_n,
    alpha_of_s,
    cover_bound,
    detect_period,
    double_rotation,
    equidistribution_test,
    mean_alpha,
    outer_angles,
    rational_dependence,
    skew_orbit,
    skew_step,
    star_discrepancy_estimate,
    suspension_demo,
    tau_of_s,
)


def _setup(case):
    p, ints = case
    c = build_circle(p, ints)
    return p, ints, c, compute_U(c, p, ints)


def test_alpha_bound(double_irrational):
    p, ints, c, U = _setup(double_irrational)
    a = alpha_of_s(np.arange(4096) / 4096, c, U, p, ints)
    assert np.all(np.abs(a) <= 2 * math.acos(p.R) / (2 * math.pi) + 1e-12)


def test_alpha_at_symmetric_point(double_irrational):
    p, ints, c, U = _setup(double_irrational)
    s = (-c.gamma_norm / 2) % 1.0
    beta, _ = outer_angles(s, c, p, ints.F)
    assert alpha_of_s(s, c, U, p, ints) == pytest.approx(2 * beta_hat(beta, p.R) / (2 * math.pi))


def test_tau_radial_and_positive(double_rational):
    p, ints, c, U = _setup(double_rational)
    # z = 0 at both ends: find such s on the N = 0 circle
    th = math.atan2(-c.e1[2], c.e2[2])
    s = (th / (2 * math.pi)) % 1.0
    x, y, z = c.point(s)
    assert abs(z) < 1e-12
    speed = math.sqrt(ints.F - x * x / p.R**2 - y * y)
    s2 = (-s - c.gamma_norm) % 1.0
    if abs(c.point(s2)[2]) < 1e-12:
        assert tau_of_s(s, c, U, p, ints) == pytest.approx(2 * (1 - p.R) / speed)
    t = tau_of_s(np.random.default_rng(0).uniform(size=10**5), c, U, p, ints)
    assert np.all(t > 0)


def test_rotation_in_s(double_irrational):
    p, ints, c, U = _setup(double_irrational)
    orb = skew_orbit(SkewState(0.2, 0.1), c, U, p, ints, 1000)
    k = np.arange(1001)
    assert np.max(np.abs(np.mod(orb.s - 0.2 - k * c.gamma_norm + 0.5, 1.0) - 0.5)) < 1e-9
    taus = tau_of_s(orb.s[:-1], c, U, p, ints)
    assert np.allclose(np.diff(orb.clock), taus, rtol=0, atol=1e-13)


def test_rational_fiber_is_rotation(double_rational):
    p, ints, c, U = _setup(double_rational)
    s0 = 0.137
    a3 = sum(alpha_of_s((s0 + j * c.gamma_norm) % 1.0, c, U, p, ints) for j in range(3))
    for phi in (0.0, 0.3, 0.71):
        orb = skew_orbit(SkewState(s0, phi), c, U, p, ints, 3)
        assert orb.s[3] == pytest.approx(s0, abs=1e-12)
        assert orb.lifted_phi[3] - orb.lifted_phi[0] == pytest.approx(a3, abs=1e-12)
    assert alpha_n(s0, c, U, p, ints, 3) == pytest.approx(a3, abs=1e-12)


def test_kernel_matches_step(double_partial_u):
    p, ints, c, U = _setup(double_partial_u)
    st = SkewState(0.3, 0.2)
    orb = skew_orbit(st, c, U, p, ints, 200)
    for k in range(200):
        st = skew_step(st, c, U, p, ints)
    assert st.s == pytest.approx(orb.s[-1], abs=1e-10)
    assert st.lifted_phi == pytest.approx(orb.lifted_phi[-1], abs=1e-10)
    assert orb.in_u.any() and not orb.in_u.all()


def test_skew_matches_oracle(double_partial_u):
    p, ints, c, U = _setup(double_partial_u)
    orb = skew_orbit(SkewState(0.06, 0.0), c, U, p, ints, 500)
    lg = run(double_rotor_state(0.06, 0.0, c, p, ints.F), OracleParams.from_physical(p),
             n_events=2000, t_max=float(orb.clock[500]) + 1e-9)
    sec = extract_poincare(lg, Section.OUTER_IMPACTS, p, c)
    assert len(sec.s) == 500
    assert np.max(np.abs(sec.s - orb.s[1:])) < 1e-9
    assert np.max(np.abs(sec.coord - orb.lifted_phi[1:])) < 1e-9
    # the start is an outer bounce inside U, so the next event is outer again
    assert orb.in_u[0] and lg.wall[0] == 1
    assert np.any((lg.wall[1:] == 1) & (lg.wall[:-1] == 1))


def test_periods(double_rational, double_irrational, double_partial_u):
    p, ints, c, U = _setup(double_rational)
    for s in np.random.default_rng(1).uniform(size=50):
        assert detect_period(BaseState(s, Sheet.O), c, U, 100) == 6
    p, ints, c, U = _setup(double_irrational)
    assert detect_period(BaseState(0.3, Sheet.O), c, U, 10**5) is None
    p, ints, c, U = _setup(double_partial_u)
    n_cover = cover_bound(U, c.gamma_norm)
    period = detect_period(BaseState(0.3, Sheet.O), c, U, 4 * n_cover + 2)
    assert period is not None and period % 2 == 0 and period <= 4 * n_cover


def test_cover_bound():
    assert cover_bound(USet(), 0.3) is None
    assert cover_bound(USet(((0.0, 1.0),)), 0.3) == 1
    assert cover_bound(USet(((0.0, 0.26),)), 0.25) == 4
    assert cover_bound(USet(((0.0, 0.25),)), 0.25) is None  # closed gaps never close
    assert cover_bound(USet(((0.0, 0.1),)), 0.5) is None


def test_mean_alpha(double_irrational):
    p, ints, c, U = _setup(double_irrational)
    ma = mean_alpha(c, U, p, ints)
    assert ma.richardson_error < 1e-10
    assert ma.symmetry_error < 1e-12
    orb = skew_orbit(SkewState(0.0, 0.0), c, U, p, ints, 10**5)
    birkhoff = (orb.lifted_phi[-1] - orb.lifted_phi[0]) / 10**5
    assert birkhoff == pytest.approx(ma.value, abs=1e-5)


def test_mean_alpha_needs_alternating(double_partial_u):
    p, ints, c, U = _setup(double_partial_u)
    with pytest.raises(NonAlternating):
        mean_alpha(c, U, p, ints)


def test_monotonicity_three_values(double_irrational):
    p, ints = double_irrational
    scan = alpha_monotonicity_scan(p, ints.N, ints.E, [8.0, 10.0, 12.0], n_points=1000)
    assert scan.mean_alpha[0] > scan.mean_alpha[1] > scan.mean_alpha[2]
    assert scan.beta_hat_decreasing and scan.w_increasing


def test_monotonicity_convention(double_rational):
    p, ints = double_rational
    with pytest.raises(ConventionViolated):
        alpha_monotonicity_scan(p, ints.N, ints.E, [8.0, 9.0])


def test_alpha_degree_zero(double_irrational):
    p, ints, c, U = _setup(double_irrational)
    assert alpha_degree(c, U, p, ints) == 0


def test_equidistribution(double_irrational):
    g = math.acos(1 / math.sqrt(3)) / math.pi
    s, phi = double_rotation(0.1, 0.2, g, math.sqrt(2) - 1, 10**5)
    d = equidistribution_test(s, phi, gamma=g, alpha_bar=math.sqrt(2) - 1)
    assert d.discrepancy < 1e-2 and d.dependence is None
    s, phi = double_rotation(0.1, 0.2, g, g, 10**5)
    assert star_discrepancy_estimate(s, phi) > 0.1
    assert rational_dependence(g, g) == (1, -1)
    with pytest.raises(ValueError):
        equidistribution_test(s[:100], phi[:100])


def test_suspension_demo(double_irrational):
    p, ints, c, U = _setup(double_irrational)
    demo = suspension_demo(0.1, c, U, p, ints, 10**5)
    a, b = demo.time_weighted
    assert abs(a - b) < 1e-2
    s0, s1 = demo.strobe
    assert abs(s0 - s1) > 0.5
