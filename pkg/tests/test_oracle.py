import math

import numpy as np
import pytest

from rotor_annulus.circle import build_circle
from rotor_annulus.core import Mode, PhysicalParams
from rotor_annulus.errors import Stuck
from rotor_annulus.oracle import (
    CartesianState,
    OracleParams,
    Section,
    Wall,
    conservation_drift,
    conserved,
    containment_error,
    double_rotor_state,
    extract_poincare,
    next_wall_hit,
    reverse_run,
    run,
    single_rotor_state,
    write_events_csv,
)


def test_radial_shot():
    hit = next_wall_hit((1.0, 0.0), (-1.0, 0.0), 0.5)
    assert hit.wall is Wall.INNER and hit.time == pytest.approx(0.5)
    assert np.allclose(hit.point, (0.5, 0.0))


def test_outward_chord():
    hit = next_wall_hit((0.5, 0.0), (1.0, 1.0), 0.5)
    assert hit.wall is Wall.OUTER
    assert np.hypot(*hit.point) == pytest.approx(1.0)


def test_grazing_start():
    hit = next_wall_hit((1.0, 0.0), (0.0, 1.0), 0.5)
    assert hit.wall is Wall.OUTER and hit.time == 0.0
    assert np.allclose(hit.point, (1.0, 0.0))


def test_tangent_to_inner_is_a_miss():
    # line y = 0.5 touches the inner circle at (0, 0.5)
    x0 = -math.sqrt(0.75)
    hit = next_wall_hit((x0, 0.5), (1.0, 0.0), 0.5)
    assert hit.wall is Wall.OUTER
    assert hit.point == pytest.approx((-x0, 0.5))


def test_stuck():
    with pytest.raises(Stuck):
        next_wall_hit((1.0, 0.0), (0.0, 0.0), 0.5)
    p = OracleParams(0.5)
    with pytest.raises(Stuck):
        run(CartesianState([(0.7, 0.0)], [(0.0, 0.0)]), p, n_events=3)


def test_alternation_single_rotor():
    p = PhysicalParams(0.5, 2.0, mode=Mode.SINGLE_ROTOR)
    lg = run(single_rotor_state(0.5, -0.3, 1.1, 0.5, 0.4), OracleParams.from_physical(p),
             n_events=1000)
    assert lg.wall[0] == 0 and np.all(lg.wall[1:] != lg.wall[:-1])
    assert containment_error(lg) < 1e-12


def test_event_access_and_csv(tmp_path):
    p = PhysicalParams(0.5, 1.3, mode=Mode.SINGLE_ROTOR)
    lg = run(single_rotor_state(0.7, 0.4, 0.9, 0.5), OracleParams.from_physical(p), n_events=5)
    ev = lg[2]
    assert ev.particle_id == 0 and ev.wall in (Wall.INNER, Wall.OUTER)
    path = tmp_path / "ev.csv"
    write_events_csv(lg, path, {0: 0.25})
    lines = path.read_bytes().split(b"\r\n")
    assert lines[0].startswith(b"event_index,time,particle,wall,s,")
    assert lines[1].split(b",")[4] == b"0.25"


def test_t_max_advances_clock():
    p = PhysicalParams(0.5, 1.3, mode=Mode.SINGLE_ROTOR)
    lg = run(single_rotor_state(0.7, 0.4, 0.9, 0.5), OracleParams.from_physical(p), t_max=3.0)
    assert lg.final.clock == 3.0 and np.all(lg.time <= 3.0)
    assert conserved(lg.final, p)["vn"] == pytest.approx(0.7)


def test_conserved_double_rotor(double_irrational):
    p, ints = double_irrational
    c = build_circle(p, ints)
    st = double_rotor_state(0.4, 0.1, c, p, ints.F)
    q = conserved(st, p)
    assert (q["N"], q["E"], q["F"]) == pytest.approx((ints.N, ints.E, ints.F))
    lg = run(st, OracleParams.from_physical(p), n_events=10_000)
    assert max(conservation_drift(lg, p).values()) < 1e-12


def test_double_rotor_section_is_rotation(double_irrational):
    p, ints = double_irrational
    c = build_circle(p, ints)
    lg = run(double_rotor_state(0.4, 0.1, c, p, ints.F), OracleParams.from_physical(p),
             n_events=2000)
    sec = extract_poincare(lg, Section.OUTER_IMPACTS, p, c)
    k = np.arange(1, len(sec.s) + 1)
    assert np.max(np.abs(np.mod(sec.s - 0.4 - k * c.gamma_norm + 0.5, 1.0) - 0.5)) < 1e-10


def test_simultaneous_warning(caplog):
    # two mirror-image particles hit the outer wall at the same instant
    st = CartesianState([(0.0, 0.6), (0.0, -0.6)], [(1.0, 0.0), (1.0, 0.0)])
    run(st, OracleParams(0.5, (1.0, 1.0), (False, False)), n_events=4)
    assert "simultaneous" in caplog.text


def test_reverse_run():
    p = PhysicalParams(0.5, 1.3, mode=Mode.SINGLE_ROTOR)
    st = single_rotor_state(0.7, 0.4, 0.9, 0.5)
    st.pos += 0.1 * st.vel  # start off the wall
    lg = run(st, OracleParams.from_physical(p), n_events=500)
    back = reverse_run(lg)
    assert np.allclose(back.pos, st.pos, atol=1e-10)
    assert np.allclose(-back.vel, st.vel, atol=1e-10)
    assert np.allclose(-back.omega, st.omega, atol=1e-10)
