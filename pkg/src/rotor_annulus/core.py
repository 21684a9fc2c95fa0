"""Parameter and integral types, validation, and rescaled velocity coordinates.

All quantities are dimensionless: the outer radius is 1 and the particle
mass is 1, so ``eta = Theta / (m r^2)`` is the rescaled moment of inertia.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError

#: relative tolerance for invariant checks on user-supplied data
INVARIANT_RTOL = 1e-9
#: relative tolerance for conservation along reduced maps
CONSERVATION_RTOL = 1e-12


class Mode(str, enum.Enum):
    SINGLE_ROTOR = "single_rotor"
    DOUBLE_ROTOR = "double_rotor"
    TWO_PARTICLE = "two_particle"


@dataclass(frozen=True)
class PhysicalParams:
    """Geometry and inertia of the annulus.

    ``eta1`` always belongs to the inner scatterer; ``eta2`` (outer
    scatterer) is only meaningful for the double-rotor system.
    """

    R: float
    eta1: float
    eta2: Optional[float] = None
    mode: Mode = Mode.DOUBLE_ROTOR

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))


@dataclass(frozen=True)
class Integrals:
    """Conserved quantities of a run.

    ``N`` is the angular momentum and ``E`` the tangential energy, both in
    the coordinates of the system's mode. ``F`` is the full energy
    (double rotor only); ``vn_fixed``/``un_fixed`` are the conserved normal
    speeds at the inner scatterer (single rotor and two particles).
    """

    N: float
    E: float
    F: Optional[float] = None
    vn_fixed: Optional[float] = None
    un_fixed: Optional[float] = None


@dataclass(frozen=True)
class RescaledVelocity:
    x: float
    y: float
    z: float
    w: float

    def integrals(self, p: PhysicalParams) -> tuple[float, float, float]:
        """Return ``(N, E, F)`` recomputed from the coordinates."""
        s1, s2 = math.sqrt(p.eta1), math.sqrt(p.eta2)
        N = s1 * self.x + s2 * self.y + self.z
        E = self.x**2 + self.y**2 + self.z**2
        F = self.x**2 / p.R**2 + self.y**2 + self.z**2 + self.w**2
        return N, E, F


def plane_norm_sq(p: PhysicalParams) -> float:
    """Squared norm of the momentum-plane normal for the mode of ``p``."""
    if p.mode is Mode.DOUBLE_ROTOR:
        return 1.0 + p.eta1 + p.eta2
    if p.mode is Mode.TWO_PARTICLE:
        return 2.0 + p.eta1
    return 1.0 + p.eta1


def validate_params(p: PhysicalParams, ints: Optional[Integrals] = None) -> list[str]:
    """Return a list of violated constraints; an empty list means valid."""
    report = []
    if not (0.0 < p.R < 1.0):
        report.append(f"R must lie in (0, 1), got {p.R!r}")
    if not p.eta1 > 0.0:
        report.append(f"eta1 must be positive, got {p.eta1!r}")
    if p.mode is Mode.DOUBLE_ROTOR:
        if p.eta2 is None:
            report.append("eta2 is required in double_rotor mode")
        elif not p.eta2 > 0.0:
            report.append(f"eta2 must be positive, got {p.eta2!r}")
    if ints is None or report:
        return report

    if not ints.E > 0.0:
        report.append(f"E must be positive, got {ints.E!r}")
        return report
    radius_sq = ints.E - ints.N**2 / plane_norm_sq(p)
    if not radius_sq > 0.0:
        report.append(
            f"empty velocity circle: N^2/|n|^2 = {ints.N**2 / plane_norm_sq(p):.17g} "
            f">= E = {ints.E:.17g}"
        )

    if p.mode is Mode.DOUBLE_ROTOR:
        if ints.F is None:
            report.append("F is required in double_rotor mode")
        elif not ints.F > ints.E:
            report.append(f"full energy F must exceed E, got F={ints.F!r}, E={ints.E!r}")
        elif radius_sq > 0.0 and _zero_velocity_reachable(p, ints):
            report.append("degenerate integrals: the particle velocity can vanish on the circle")
    else:
        if ints.vn_fixed is None or not ints.vn_fixed > 0.0:
            report.append("vn_fixed must be a positive normal speed")
        if p.mode is Mode.TWO_PARTICLE and (ints.un_fixed is None or not ints.un_fixed > 0.0):
            report.append("un_fixed must be a positive normal speed")
    return report


def require_valid(p: PhysicalParams, ints: Optional[Integrals] = None) -> None:
    report = validate_params(p, ints)
    if report:
        raise ConfigError("; ".join(report))


def _zero_velocity_reachable(p: PhysicalParams, ints: Integrals) -> bool:
    # v = 0 means z = 0 and x^2/R^2 + y^2 = F; on the circle x^2 + y^2 = E and
    # sqrt(eta1) x + sqrt(eta2) y = N, which has at most two solutions.
    a, b = math.sqrt(p.eta1), math.sqrt(p.eta2)
    nn = a * a + b * b
    disc = ints.E * nn - ints.N**2
    if disc < 0.0:
        return False
    root = math.sqrt(disc)
    for sign in (1.0, -1.0):
        x = (a * ints.N + sign * b * root) / nn
        y = (b * ints.N - sign * a * root) / nn
        if abs(x**2 / p.R**2 + y**2 - ints.F) <= INVARIANT_RTOL * ints.F:
            return True
    return False


def rescale(vt: float, omega1: float, omega2: float, vn: float, p: PhysicalParams) -> RescaledVelocity:
    """Map physical components (outer-wall splitting) to ``(x, y, z, w)``."""
    return RescaledVelocity(
        x=math.sqrt(p.eta1) * p.R**2 * omega1,
        y=math.sqrt(p.eta2) * omega2,
        z=vt,
        w=vn,
    )


def unrescale(v: RescaledVelocity, p: PhysicalParams) -> tuple[float, float, float, float]:
    """Inverse of :func:`rescale`; returns ``(vt, omega1, omega2, vn)``."""
    return (
        v.z,
        v.x / (math.sqrt(p.eta1) * p.R**2),
        v.y / math.sqrt(p.eta2),
        v.w,
    )


def normal_speed_sq(x, y, z, p: PhysicalParams, F: float):
    """Signed ``w^2`` implied by the full energy; works on arrays."""
    return F - x * x / p.R**2 - y * y - z * z
