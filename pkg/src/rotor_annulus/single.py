"""One particle, inner rotor only, elastic outer wall.

Velocity components are split at the inner scatterer.  The normal speed
``vn`` is an integral of motion, inner and outer bounces alternate, and the
pair ``(vt, omega)`` cycles with period two.  The impact angle ``phi`` on
the outer circle performs a rigid rotation.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .collisions import exchange
from .core import Mode, PhysicalParams
from .errors import Unreachable
from .geometry import beta_hat, outer_angle_from_inner


class Phase(enum.Enum):
    INNER = "inner"
    OUTER = "outer"


@dataclass(frozen=True)
class SingleRotorState:
    """State between two bounces.

    ``phi`` is the polar angle (radians, in ``[0, 2 pi)``) of the last
    impact point and ``winding`` counts full turns; right after an outer
    bounce it is the outer-circle impact arclength.  ``phase`` names the
    wall hit next.
    """

    vn: float
    vt: float
    omega: float
    phi: float = 0.0
    winding: int = 0
    phase: Phase = Phase.INNER

    def __post_init__(self):
        if not self.vn > 0.0:
            raise Unreachable(f"normal speed at the inner wall must be positive, got {self.vn!r}")
        object.__setattr__(self, "phase", Phase(self.phase))

    @classmethod
    def from_outer(cls, vt_out: float, vn_out: float, omega: float, R: float,
                   phi: float = 0.0) -> "SingleRotorState":
        """Build from components at the outer wall, rejecting orbits that miss the rotor."""
        speed2 = vt_out * vt_out + vn_out * vn_out
        vt = vt_out / R
        vn2 = speed2 - vt * vt
        if not vn2 > 0.0:
            raise Unreachable(
                f"impact parameter |vt|/|v| = {abs(vt_out) / math.sqrt(speed2):.6g} >= R = {R!r}: "
                "the orbit stays in the outer circle"
            )
        return cls(math.sqrt(vn2), vt, omega, phi % (2.0 * math.pi), int(phi // (2.0 * math.pi)))

    def integrals(self, p: PhysicalParams) -> tuple[float, float]:
        rw = p.R * self.omega
        return self.vt + p.eta1 * rw, self.vt * self.vt + p.eta1 * rw * rw

    @property
    def unwrapped_phi(self) -> float:
        return self.phi + 2.0 * math.pi * self.winding


def _leg_advance(vt, vn, R):
    return beta_hat(outer_angle_from_inner(vt, vn, R), R)


def _advance(st: SingleRotorState, dphi: float) -> tuple[float, int]:
    total = st.phi + dphi
    turns = math.floor(total / (2.0 * math.pi))
    return total - 2.0 * math.pi * turns, st.winding + turns


def single_step(st: SingleRotorState, p: PhysicalParams) -> SingleRotorState:
    """Fly to the next wall and bounce there."""
    if p.mode is not Mode.SINGLE_ROTOR:
        raise ValueError("single_step expects single_rotor parameters")
    phi, wind = _advance(st, _leg_advance(st.vt, st.vn, p.R))
    if st.phase is Phase.INNER:
        vt, rw = exchange(st.vt, p.R * st.omega, p.eta1)
        return replace(st, vt=vt, omega=rw / p.R, phi=phi, winding=wind, phase=Phase.OUTER)
    return replace(st, phi=phi, winding=wind, phase=Phase.INNER)


def fiber_rotation_angle(st: SingleRotorState, p: PhysicalParams) -> float:
    """Outer-impact advance over one inner-outer cycle, in radians.

    Sum of the chord deflections of the two velocities in the period-two
    cycle; the same for every outer bounce along the orbit.
    """
    if not st.vn > 0.0:
        raise Unreachable("zero normal speed never reaches the inner scatterer")
    vt2, _ = exchange(st.vt, p.R * st.omega, p.eta1)
    return float(_leg_advance(st.vt, st.vn, p.R) + _leg_advance(vt2, st.vn, p.R))


def orbit(st: SingleRotorState, p: PhysicalParams, n: int) -> list[SingleRotorState]:
    out = [st]
    for _ in range(n):
        st = single_step(st, p)
        out.append(st)
    return out


def state_from_integrals(N: float, E: float, vn: float, p: PhysicalParams, branch: int = 0,
                         phi: float = 0.0) -> SingleRotorState:
    """The state with tangential integrals ``(N, E)``; ``branch`` picks one of the two roots."""
    eta = p.eta1
    # vt + eta rw = N, vt^2 + eta rw^2 = E
    a = 1.0 + 1.0 / eta
    disc = N * N / (eta * eta) - a * (N * N / eta - E)
    if disc < 0.0:
        raise ValueError(f"no state with N={N!r}, E={E!r}")
    sign = 1.0 if branch == 0 else -1.0
    vt = (N / eta + sign * math.sqrt(disc)) / a
    rw = (N - vt) / eta
    return SingleRotorState(vn, vt, rw / p.R, phi)


def rotation_monotonicity(N: float, E: float, vns, p: PhysicalParams) -> np.ndarray:
    """Fiber rotation angle along increasing normal speeds at fixed ``(N, E)``."""
    return np.array([fiber_rotation_angle(state_from_integrals(N, E, v, p), p) for v in vns])
