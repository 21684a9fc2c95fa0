"""Event-driven Cartesian simulation of one or two particles in the annulus.

Free flight is exact, so collision times come from closed-form quadratics
and there is no time step.  Impact points are projected back onto the wall
after every event.  Both particles share one event queue ordered by
absolute time and interact only through the rotor angular velocities.

Walls are indexed 0 (inner, radius ``R``) and 1 (outer, radius 1).
"""
from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._backend import kernels as _default_kernels
from .core import Mode, PhysicalParams
from .errors import NumericalDrift, Stuck
from .geometry import chord_length, outer_angle_from_inner

log = logging.getLogger(__name__)

CONTAINMENT_TOL = 1e-12


class Wall(enum.IntEnum):
    INNER = 0
    OUTER = 1


class Section(enum.Enum):
    OUTER_IMPACTS = "outer"
    INNER_V_IMPACTS = "inner_v"


@dataclass
class CartesianState:
    """Positions ``(n, 2)``, velocities ``(n, 2)``, rotor rates ``(inner, outer)``."""

    pos: np.ndarray
    vel: np.ndarray
    omega: np.ndarray = field(default_factory=lambda: np.zeros(2))
    clock: float = 0.0

    def __post_init__(self):
        self.pos = np.array(self.pos, dtype=float).reshape(-1, 2)
        self.vel = np.array(self.vel, dtype=float).reshape(-1, 2)
        self.omega = np.array(self.omega, dtype=float).reshape(2)
        if self.pos.shape != self.vel.shape or not 1 <= len(self.pos) <= 2:
            raise ValueError("need one or two particles with matching position and velocity")

    def copy(self) -> "CartesianState":
        return CartesianState(self.pos.copy(), self.vel.copy(), self.omega.copy(), self.clock)

    def reversed(self) -> "CartesianState":
        """Same positions with every velocity and rotor rate negated."""
        return CartesianState(self.pos.copy(), -self.vel, -self.omega, self.clock)


@dataclass(frozen=True)
class OracleParams:
    R: float
    eta: tuple = (1.0, 1.0)
    rotor: tuple = (True, False)

    @classmethod
    def from_physical(cls, p: PhysicalParams) -> "OracleParams":
        if p.mode is Mode.DOUBLE_ROTOR:
            return cls(p.R, (p.eta1, p.eta2), (True, True))
        return cls(p.R, (p.eta1, 1.0), (True, False))


@dataclass(frozen=True)
class WallHit:
    wall: Wall
    time: float
    point: np.ndarray


@dataclass(frozen=True)
class CollisionEvent:
    time: float
    particle_id: int
    wall: Wall
    point: np.ndarray
    vel_pre: np.ndarray
    vel_post: np.ndarray
    omega_pre: np.ndarray
    omega_post: np.ndarray


@dataclass
class EventLog:
    """Columnar event record; ``log[i]`` gives a :class:`CollisionEvent`."""

    time: np.ndarray
    particle: np.ndarray
    wall: np.ndarray
    pos: np.ndarray
    vel_pre: np.ndarray
    vel_post: np.ndarray
    omega_pre: np.ndarray
    omega_post: np.ndarray
    initial: CartesianState
    final: CartesianState
    params: OracleParams

    def __len__(self):
        return len(self.time)

    def __getitem__(self, i) -> CollisionEvent:
        return CollisionEvent(
            float(self.time[i]),
            int(self.particle[i]),
            Wall(int(self.wall[i])),
            self.pos[i],
            self.vel_pre[i],
            self.vel_post[i],
            self.omega_pre[i],
            self.omega_post[i],
        )


def next_wall_hit(pos, vel, R: float, kernels=None) -> WallHit:
    """First wall reached by free flight from ``pos`` with velocity ``vel``.

    A chord tangent to the inner circle counts as a miss.
    """
    k = kernels or _default_kernels
    px, py = (float(a) for a in pos)
    vx, vy = (float(a) for a in vel)
    t, w = k.next_hit(px, py, vx, vy, R)
    if w < 0:
        raise Stuck("particle at rest")
    r = R if w == 0 else 1.0
    q = np.array([px + t * vx, py + t * vy])
    return WallHit(Wall(w), t, r * q / np.linalg.norm(q))


def _alloc(n):
    return (
        np.zeros(n),
        np.zeros(n, dtype=np.int64),
        np.zeros(n, dtype=np.int8),
        np.zeros((n, 2)),
        np.zeros((n, 2)),
        np.zeros((n, 2)),
        np.zeros((n, 2)),
        np.zeros((n, 2)),
    )


def run(initial: CartesianState, params: OracleParams, n_events: Optional[int] = None,
        t_max: float = math.inf, kernels=None) -> EventLog:
    """Simulate until ``n_events`` collisions or clock ``t_max``, whichever is first.

    Raises :class:`Stuck` for a particle at rest and :class:`NumericalDrift`
    if an impact point strays more than 1e-9 from its wall.
    """
    if n_events is None and not math.isfinite(t_max):
        raise ValueError("give n_events or a finite t_max")
    k = kernels or _default_kernels
    st = initial.copy()
    cap = n_events if n_events is not None else 1024
    tref = np.full(len(st.pos), st.clock)
    chunks = []
    done = 0
    clock = st.clock
    while True:
        n = cap if n_events is None else n_events - done
        buf = _alloc(n)
        got, clock, status = k.run_events(
            params.R,
            np.asarray(params.eta, dtype=float),
            np.asarray(params.rotor, dtype=np.int8),
            st.pos, st.vel, tref, st.omega, clock, n, t_max, *buf,
        )
        chunks.append(tuple(a[:got] for a in buf))
        done += got
        if status == 1:
            raise Stuck("particle at rest")
        if status == 2:
            raise NumericalDrift(f"impact point left its wall by more than 1e-9 after {done} events")
        if got < n or (n_events is not None and done >= n_events):
            break
    st.clock = clock
    cols = [np.concatenate(c) for c in zip(*chunks)]
    out = EventLog(*cols, initial=initial.copy(), final=st, params=params)
    _warn_ties(out)
    return out


def _warn_ties(lg: EventLog) -> None:
    if len(lg) < 2:
        return
    same = (np.diff(lg.time) == 0.0) & (np.diff(lg.particle) != 0)
    if same.any():
        log.warning("%d simultaneous collisions resolved lower particle first", int(same.sum()))


def reverse_run(lg: EventLog, kernels=None) -> CartesianState:
    """Negate velocities at the end of ``lg`` and run for the same duration."""
    back = lg.final.reversed()
    duration = lg.final.clock - lg.initial.clock
    res = run(back, lg.params, n_events=10 * len(lg) + 10, t_max=back.clock + duration, kernels=kernels)
    return res.final


def double_rotor_state(s: float, phi: float, circle, p: PhysicalParams, F: float) -> CartesianState:
    """Particle just after an outer bounce at angle ``phi`` (turns) with velocity ``s``."""
    x, y, z = (float(a) for a in circle.point(s))
    w = math.sqrt(max(F - x * x / p.R**2 - y * y - z * z, 0.0))
    th = 2.0 * math.pi * phi
    c, sn = math.cos(th), math.sin(th)
    vel = (-w * c - z * sn, -w * sn + z * c)
    omega = (x / (math.sqrt(p.eta1) * p.R**2), y / math.sqrt(p.eta2))
    return CartesianState([(c, sn)], [vel], omega)


def single_rotor_state(vn: float, vt: float, omega: float, R: float, phi: float = 0.0) -> CartesianState:
    """Particle just after an outer bounce at angle ``phi`` (radians), heading inward.

    ``vn`` and ``vt`` are the components it will have at the inner wall.
    """
    L = R * vt
    w = math.sqrt(vn * vn + vt * vt - L * L)
    c, sn = math.cos(phi), math.sin(phi)
    return CartesianState([(c, sn)], [(-w * c - L * sn, -w * sn + L * c)], (omega, 0.0))


# ---------------------------------------------------------------------------
# conserved quantities


def angular_momenta(pos, vel):
    pos = np.atleast_2d(pos)
    vel = np.atleast_2d(vel)
    return pos[:, 0] * vel[:, 1] - pos[:, 1] * vel[:, 0]


def conserved(st: CartesianState, p: PhysicalParams) -> dict:
    """The mode's integrals computed from a Cartesian state.

    Single rotor: ``N, E`` in inner-wall units and the inner normal speed.
    Double rotor: ``N, E, F`` of the rescaled coordinates.  Two particles:
    ``N, E`` of ``(v, u, q)`` and both inner normal speeds.
    """
    R = p.R
    L = angular_momenta(st.pos, st.vel)
    speed2 = np.sum(st.vel**2, axis=1)
    w1, w2 = st.omega
    if p.mode is Mode.DOUBLE_ROTOR:
        x = math.sqrt(p.eta1) * R * R * w1
        y = math.sqrt(p.eta2) * w2
        z = L[0]
        return {
            "N": math.sqrt(p.eta1) * x + math.sqrt(p.eta2) * y + z,
            "E": x * x + y * y + z * z,
            "F": x * x / (R * R) + y * y + speed2[0],
        }
    vt = L / R
    vn = np.sqrt(np.maximum(speed2 - vt * vt, 0.0))
    rw = R * w1
    out = {
        "N": float(np.sum(vt)) + p.eta1 * rw,
        "E": float(np.sum(vt * vt)) + p.eta1 * rw * rw,
        "vn": float(vn[0]),
    }
    if len(vt) > 1:
        out["un"] = float(vn[1])
    return out


def _latest(values, mask, initial):
    # forward-fill ``values`` from the rows where ``mask`` holds, starting at ``initial``
    idx = np.where(mask, np.arange(len(mask)), -1)
    idx = np.maximum.accumulate(idx)
    out = np.where(idx >= 0, values[np.maximum(idx, 0)], initial)
    return out


def conservation_drift(lg: EventLog, p: PhysicalParams) -> dict:
    """Largest relative deviation of each integral over all post-event states."""
    ref = conserved(lg.initial, p)
    if not len(lg):
        return {k: 0.0 for k in ref}
    R = p.R
    L_ev = angular_momenta(lg.pos, lg.vel_post)
    sp_ev = np.sum(lg.vel_post**2, axis=1)
    L0 = angular_momenta(lg.initial.pos, lg.initial.vel)
    sp0 = np.sum(lg.initial.vel**2, axis=1)
    n_p = len(lg.initial.pos)
    L = [_latest(L_ev, lg.particle == j, L0[j]) for j in range(n_p)]
    sp = [_latest(sp_ev, lg.particle == j, sp0[j]) for j in range(n_p)]
    w1, w2 = lg.omega_post[:, 0], lg.omega_post[:, 1]
    if p.mode is Mode.DOUBLE_ROTOR:
        x = math.sqrt(p.eta1) * R * R * w1
        y = math.sqrt(p.eta2) * w2
        cur = {
            "N": math.sqrt(p.eta1) * x + math.sqrt(p.eta2) * y + L[0],
            "E": x * x + y * y + L[0] ** 2,
            "F": x * x / (R * R) + y * y + sp[0],
        }
    else:
        vt = [a / R for a in L]
        rw = R * w1
        cur = {
            "N": sum(vt) + p.eta1 * rw,
            "E": sum(a * a for a in vt) + p.eta1 * rw * rw,
            "vn": np.sqrt(np.maximum(sp[0] - vt[0] ** 2, 0.0)),
        }
        if n_p > 1:
            cur["un"] = np.sqrt(np.maximum(sp[1] - vt[1] ** 2, 0.0))
    return {k: float(np.max(np.abs(cur[k] - ref[k]))) / max(abs(ref[k]), 1e-300) for k in ref}


def containment_error(lg: EventLog) -> float:
    """Largest distance of a recorded impact point from its wall."""
    r = np.where(lg.wall == 0, lg.params.R, 1.0)
    return float(np.max(np.abs(np.hypot(lg.pos[:, 0], lg.pos[:, 1]) - r), initial=0.0))


# ---------------------------------------------------------------------------
# Poincare sections


@dataclass
class PoincareSeries:
    """Section data: event times, base coordinate ``s`` and fiber/phase coordinate.

    For outer impacts ``coord`` is the impact angle in turns, unwrapped; for
    v-collisions it is the phase ``t`` of the second particle.
    """

    time: np.ndarray
    s: Optional[np.ndarray]
    coord: np.ndarray
    event_index: np.ndarray


def _inner_period(vt, vn, R):
    beta = outer_angle_from_inner(vt, vn, R)
    return 2.0 * chord_length(beta, R) / math.hypot(vt, vn)


def extract_poincare(lg: EventLog, section: Section, p: PhysicalParams, circle=None,
                     t_last_u: Optional[float] = None) -> PoincareSeries:
    """Reduce an event log to the section coordinates.

    ``OUTER_IMPACTS`` returns ``(s, phi)`` after every outer bounce of
    particle 0 (``s`` only when a double-rotor ``circle`` is given).
    ``INNER_V_IMPACTS`` returns ``(s, t)`` after every inner bounce of
    particle 0 in a two-particle run; ``t_last_u`` is the time of the last
    u-collision before the log starts.
    """
    if section is Section.OUTER_IMPACTS:
        idx = np.nonzero((lg.wall == 1) & (lg.particle == 0))[0]
        q = lg.pos[idx]
        phi = np.unwrap(np.arctan2(q[:, 1], q[:, 0])) / (2.0 * math.pi)
        s = None
        if circle is not None:
            L = angular_momenta(q, lg.vel_post[idx])
            x = math.sqrt(p.eta1) * p.R**2 * lg.omega_post[idx, 0]
            y = math.sqrt(p.eta2) * lg.omega_post[idx, 1]
            s = np.array([circle.s_of((a, b, c)) for a, b, c in zip(x, y, L)])
        return PoincareSeries(lg.time[idx], s, phi, idx)

    if circle is None or t_last_u is None:
        raise ValueError("the v-collision section needs the circle and the last u-collision time")
    R = p.R
    init = lg.initial
    L1 = float(angular_momenta(init.pos[1], init.vel[1])[0])
    un = math.sqrt(max(float(init.vel[1] @ init.vel[1]) - (L1 / R) ** 2, 0.0))
    last_u = t_last_u
    times, ss, ts, ids = [], [], [], []
    sq = math.sqrt(p.eta1)
    for i in range(len(lg)):
        if lg.wall[i] != 0:
            continue
        if lg.particle[i] == 1:
            last_u = float(lg.time[i])
            L1 = float(angular_momenta(lg.pos[i], lg.vel_post[i])[0])
            continue
        v = float(angular_momenta(lg.pos[i], lg.vel_post[i])[0]) / R
        u = L1 / R
        q = sq * R * float(lg.omega_post[i, 0])
        s = circle.s_of((v, u, q))
        tau2 = _inner_period(u, un, R)
        times.append(float(lg.time[i]))
        ss.append(s)
        ts.append((float(lg.time[i]) - last_u) / tau2)
        ids.append(i)
    return PoincareSeries(np.array(times), np.array(ss), np.array(ts), np.array(ids, dtype=np.int64))


# ---------------------------------------------------------------------------
# export

EVENT_COLUMNS = [
    "event_index", "time", "particle", "wall", "s",
    "pos_x", "pos_y",
    "vel_pre_x", "vel_pre_y", "vel_post_x", "vel_post_y",
    "omega_inner_pre", "omega_outer_pre", "omega_inner_post", "omega_outer_post",
]


def write_events_csv(lg: EventLog, path, s_values: Optional[dict] = None) -> None:
    """Write the log as CSV; ``s_values`` maps event index to a section ``s``."""
    from .io import fmt

    s_values = s_values or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EVENT_COLUMNS)
        for i in range(len(lg)):
            s = s_values.get(i)
            w.writerow(
                [i, fmt(lg.time[i]), int(lg.particle[i]), Wall(int(lg.wall[i])).name.lower(),
                 "" if s is None else fmt(s)]
                + [fmt(a) for a in (*lg.pos[i], *lg.vel_pre[i], *lg.vel_post[i],
                                    *lg.omega_pre[i], *lg.omega_post[i])]
            )
