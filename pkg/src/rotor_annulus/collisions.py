"""Rotor interaction law and its specialisations.

A collision with a rotating circular scatterer flips the normal velocity
component and exchanges tangential momentum with the rim::

    vt' = vt - 2 eta / (1 + eta) * (vt - r omega)
    r omega' = r omega + 2 / (1 + eta) * (vt - r omega)

which conserves ``vt + eta r omega`` and ``vt^2 + eta (r omega)^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .core import PhysicalParams, RescaledVelocity
from .errors import Unreachable


@dataclass(frozen=True)
class RotorContact:
    vn: float
    vt: float
    r_omega: float
    eta: float
    r: float = 1.0

    def __post_init__(self):
        if not (self.eta > 0.0 and self.r > 0.0):
            raise ValueError("eta and r must be positive")


def exchange(vt, r_omega, eta):
    """Tangential part of the rotor law; accepts scalars or arrays."""
    slip = vt - r_omega
    return vt - 2.0 * eta / (1.0 + eta) * slip, r_omega + 2.0 / (1.0 + eta) * slip


def rotor_reflect(c: RotorContact) -> RotorContact:
    vt, rw = exchange(c.vt, c.r_omega, c.eta)
    return replace(c, vn=-c.vn, vt=vt, r_omega=rw)


def rotor_reflect_involution_check(c: RotorContact, tol: float = 1e-14) -> bool:
    back = rotor_reflect(rotor_reflect(c))
    scale = max(1.0, abs(c.vn), abs(c.vt), abs(c.r_omega))
    return all(
        abs(a - b) <= tol * scale
        for a, b in ((back.vn, c.vn), (back.vt, c.vt), (back.r_omega, c.r_omega))
    )


def reaches_inner(z, w, R):
    """True when an outgoing velocity from the outer wall hits the inner disc.

    Tangential contact counts as a miss.
    """
    return (1.0 - R * R) * z * z < R * R * w * w


def _full_energy(v: RescaledVelocity, R: float) -> float:
    return v.x**2 / R**2 + v.y**2 + v.z**2 + v.w**2


def _normal_from_energy(F, x, y, z, R):
    w2 = F - x * x / (R * R) - y * y - z * z
    return math.sqrt(max(w2, 0.0))


def inner_collision_double(v: RescaledVelocity, p: PhysicalParams) -> RescaledVelocity:
    """Collision with the inner rotor in rescaled coordinates.

    Acts on the pair ``(z, R^2 omega_1)`` and leaves ``y`` alone; the outer
    normal speed ``w`` is recomputed from the full energy.
    """
    if not reaches_inner(v.z, v.w, p.R):
        raise Unreachable(f"z={v.z!r}, w={v.w!r} misses the inner scatterer at R={p.R!r}")
    F = _full_energy(v, p.R)
    s1 = math.sqrt(p.eta1)
    z, rim = exchange(v.z, v.x / s1, p.eta1)
    x = s1 * rim
    return RescaledVelocity(x, v.y, z, _normal_from_energy(F, x, v.y, z, p.R))


def outer_collision_double(v: RescaledVelocity, p: PhysicalParams) -> RescaledVelocity:
    """Collision with the outer rotor; acts on ``(z, omega_2)``."""
    F = _full_energy(v, p.R)
    s2 = math.sqrt(p.eta2)
    z, rim = exchange(v.z, v.y / s2, p.eta2)
    y = s2 * rim
    return RescaledVelocity(v.x, y, z, _normal_from_energy(F, v.x, y, z, p.R))


def reflect_across_plane(point, normal):
    """Euclidean reflection of a 3-vector across the plane ``normal . p = 0``."""
    nn = sum(a * a for a in normal)
    k = 2.0 * sum(a * b for a, b in zip(point, normal)) / nn
    return tuple(a - k * b for a, b in zip(point, normal))
