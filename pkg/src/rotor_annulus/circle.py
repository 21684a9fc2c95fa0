"""Velocity circle and the two-sheet base map of the double-rotor system.

In rescaled coordinates ``(x, y, z)`` the velocities live on the
intersection of the sphere ``|p|^2 = E`` with the plane ``n . p = N``.
Both collision laws are reflections across planes through the origin that
contain ``n``'s orthogonal complement, so on the circle they become
reflections across diameters.  With the normalised arclength ``s`` in
``[0, 1)`` anchored on the outer-collision diameter, outer bounces act as
``s -> -s`` and inner bounces as ``s -> -s - gamma``.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import numpy as np

from .core import INVARIANT_RTOL, Integrals, Mode, PhysicalParams, RescaledVelocity, require_valid
from .errors import EmptyCircle, InvalidState, OffCircle

log = logging.getLogger(__name__)

#: U endpoints are bracketed on this many uniform samples before bisection
U_SCAN_POINTS = 1 << 16
U_ENDPOINT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class VelocityCircle:
    center: np.ndarray
    radius: float
    e1: np.ndarray
    e2: np.ndarray
    gamma_norm: float
    normal: np.ndarray
    N: float
    E: float
    fixed_mirror: np.ndarray = field(repr=False)
    moving_mirror: np.ndarray = field(repr=False)

    @property
    def anchor(self) -> np.ndarray:
        return self.center + self.radius * self.e1

    def point(self, s):
        """Coordinates at normalised arclength ``s``; shape ``(3,)`` or ``(3, n)``."""
        th = 2.0 * math.pi * np.asarray(s, dtype=float)
        shape = (3,) + (1,) * th.ndim
        return self.center.reshape(shape) + self.radius * (
            self.e1.reshape(shape) * np.cos(th) + self.e2.reshape(shape) * np.sin(th)
        )

    def s_of(self, pt) -> float:
        d = np.asarray(pt, dtype=float) - self.center
        return float(np.mod(math.atan2(d @ self.e2, d @ self.e1) / (2.0 * math.pi), 1.0))


def _unit(v):
    return v / np.linalg.norm(v)


def circle_from_planes(normal, N, E, fixed_mirror, moving_mirror, prefer=(2, 1)) -> VelocityCircle:
    """Intersect ``|p|^2 = E`` with ``normal . p = N`` and orient it.

    ``fixed_mirror`` and ``moving_mirror`` are the normals of the two
    reflection planes. The anchor ``s = 0`` is the intersection with the
    fixed mirror that has the larger coordinate ``prefer[0]`` (ties broken on
    ``prefer[1]``); the orientation makes the moving reflection
    ``s -> -s - gamma`` with ``gamma`` in ``[0, 1/2]``.
    """
    n = np.asarray(normal, dtype=float)
    nn = float(n @ n)
    radius_sq = E - N * N / nn
    if not radius_sq > 0.0:
        raise EmptyCircle(f"N^2/|n|^2 = {N * N / nn!r} >= E = {E!r}")
    if radius_sq < 1e-6 * E:
        log.warning("near-degenerate velocity circle: radius^2 = %.3g", radius_sq)
    radius = math.sqrt(radius_sq)
    center = N * n / nn
    nhat = _unit(n)

    d_fixed = _unit(np.cross(nhat, fixed_mirror))
    cands = [center + radius * d_fixed, center - radius * d_fixed]
    i, j = prefer
    cands.sort(key=lambda q: (q[i], q[j]), reverse=True)
    e1 = (cands[0] - center) / radius
    e2 = np.cross(nhat, e1)

    d_moving = _unit(np.cross(nhat, moving_mirror))
    theta = math.atan2(d_moving @ e2, d_moving @ e1)
    gamma = (-theta / math.pi) % 1.0
    if gamma > 0.5:
        e2 = -e2
        gamma = 1.0 - gamma
    return VelocityCircle(
        center=center,
        radius=radius,
        e1=e1,
        e2=e2,
        gamma_norm=gamma,
        normal=n,
        N=float(N),
        E=float(E),
        fixed_mirror=np.asarray(fixed_mirror, dtype=float),
        moving_mirror=np.asarray(moving_mirror, dtype=float),
    )


def double_rotor_planes(p: PhysicalParams):
    """Plane normal, outer mirror normal and inner mirror normal in ``(x, y, z)``."""
    a, b = math.sqrt(p.eta1), math.sqrt(p.eta2)
    return np.array([a, b, 1.0]), np.array([0.0, -1.0, b]), np.array([-1.0, 0.0, a])


def build_circle(p: PhysicalParams, ints: Integrals) -> VelocityCircle:
    """Velocity circle of the double-rotor system."""
    if p.mode is not Mode.DOUBLE_ROTOR:
        raise ValueError("build_circle expects double_rotor parameters")
    n, outer, inner = double_rotor_planes(p)
    if not ints.E - ints.N**2 / float(n @ n) > 0.0:
        raise EmptyCircle(f"sphere E={ints.E!r} and plane N={ints.N!r} do not intersect")
    return circle_from_planes(n, ints.N, ints.E, outer, inner, prefer=(2, 1))


def gamma_closed_form(p: PhysicalParams) -> float:
    """Normalised rotation angle from the inertia parameters alone."""
    return math.acos(cos_half_gamma(p)) / math.pi


def cos_half_gamma(p: PhysicalParams) -> float:
    if p.mode is Mode.TWO_PARTICLE:
        return 1.0 / (1.0 + p.eta1)
    return ((1.0 + 1.0 / p.eta1) * (1.0 + 1.0 / p.eta2)) ** -0.5


def s_of_velocity(v, c: VelocityCircle, rtol: float = INVARIANT_RTOL) -> float:
    """Normalised arclength of a velocity triple (or :class:`RescaledVelocity`)."""
    pt = np.array([v.x, v.y, v.z]) if isinstance(v, RescaledVelocity) else np.asarray(v, dtype=float)
    scale = max(c.E, 1e-300)
    sphere = abs(float(pt @ pt) - c.E)
    plane = abs(float(c.normal @ pt) - c.N)
    if sphere > rtol * scale or plane > rtol * math.sqrt(scale * float(c.normal @ c.normal)):
        raise OffCircle(f"velocity {pt.tolist()} is off the circle (sphere {sphere:.3g}, plane {plane:.3g})")
    return c.s_of(pt)


def velocity_of_s(s, c: VelocityCircle):
    return c.point(s)


def outer_normal_sq(s, c: VelocityCircle, p: PhysicalParams, F: float):
    """Signed ``w(s)^2`` from the full energy."""
    x, y, z = c.point(s)
    return F - x * x / p.R**2 - y * y - z * z


def rescaled_at(s: float, c: VelocityCircle, p: PhysicalParams, F: float) -> RescaledVelocity:
    x, y, z = (float(a) for a in c.point(s))
    w2 = F - x * x / p.R**2 - y * y - z * z
    return RescaledVelocity(x, y, z, math.sqrt(max(w2, 0.0)))


# ---------------------------------------------------------------------------
# the miss set U


@dataclass(frozen=True)
class USet:
    """Finite union of open arcs ``(start, start + length)`` on ``[0, 1)``."""

    arcs: tuple = ()

    @property
    def empty(self) -> bool:
        return not self.arcs

    @property
    def full(self) -> bool:
        return len(self.arcs) == 1 and self.arcs[0][1] >= 1.0

    @property
    def measure(self) -> float:
        return min(1.0, sum(length for _, length in self.arcs))

    def contains(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape, dtype=bool)
        for a, length in self.arcs:
            if length >= 1.0:
                return np.ones(s.shape, dtype=bool) if s.ndim else True
            d = np.mod(s - a, 1.0)
            out |= (d > 0.0) & (d < length)
        return out if s.ndim else bool(out)

    def boundary_distance(self, s):
        """Circular distance from ``s`` to the nearest arc endpoint (inf if none)."""
        s = np.asarray(s, dtype=float)
        best = np.full(s.shape, np.inf)
        for a, length in self.arcs:
            if length >= 1.0:
                continue
            for e in (a, a + length):
                d = np.abs(np.mod(s - e + 0.5, 1.0) - 0.5)
                best = np.minimum(best, d)
        return best if s.ndim else float(best)

    def reflect(self, gamma: float) -> "USet":
        """Image under ``s -> -s - gamma``."""
        return USet(
            tuple(sorted(((-(a + length) - gamma) % 1.0, length) for a, length in self.arcs))
        )

    def endpoints(self) -> list:
        return [[a, (a + length) % 1.0] for a, length in self.arcs]


def u_indicator(s, c: VelocityCircle, p: PhysicalParams, F: float):
    """``z^2 - R^2/(1-R^2) w^2``; strictly positive exactly on U."""
    x, y, z = c.point(s)
    w2 = F - x * x / p.R**2 - y * y - z * z
    return z * z - p.R**2 / (1.0 - p.R**2) * w2


def compute_U(
    c: VelocityCircle,
    p: PhysicalParams,
    ints: Integrals,
    n_scan: int = U_SCAN_POINTS,
    tol: float = U_ENDPOINT_TOL,
) -> USet:
    """Locate the arcs where the outgoing trajectory misses the inner disc."""
    F = ints.F
    grid = np.arange(n_scan) / n_scan
    pos = u_indicator(grid, c, p, F) > 0.0
    if pos.all():
        return USet(((0.0, 1.0),))
    if not pos.any():
        return USet()

    idx = np.nonzero(pos != np.roll(pos, -1))[0]
    lo = grid[idx]
    hi = lo + 1.0 / n_scan
    lo_pos = pos[idx]
    while float(np.max(hi - lo)) > tol:
        mid = 0.5 * (lo + hi)
        mid_pos = u_indicator(mid, c, p, F) > 0.0
        same = mid_pos == lo_pos
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    edges = np.mod(0.5 * (lo + hi), 1.0)
    rising = ~lo_pos

    # edges come in scan order, so each rising edge pairs with the next falling one
    arcs = []
    m = len(edges)
    for k in range(m):
        if rising[k]:
            end = next(edges[(k + j) % m] for j in range(1, m + 1) if not rising[(k + j) % m])
            arcs.append((float(edges[k]), float((end - edges[k]) % 1.0)))
    return USet(tuple(sorted(arcs)))


def u_reflection_error(U: USet, gamma: float) -> float:
    """Largest endpoint mismatch between U and its image under ``s -> -s - gamma``."""
    if U.empty or U.full:
        return 0.0
    img = U.reflect(gamma)
    if len(img.arcs) != len(U.arcs):
        return math.inf
    worst = 0.0
    for a, la in img.arcs:
        best = min(
            max(abs((a - b + 0.5) % 1.0 - 0.5), abs(la - lb)) for b, lb in U.arcs
        )
        worst = max(worst, best)
    return worst


# ---------------------------------------------------------------------------
# the two-sheet base map


class Sheet(enum.IntEnum):
    """Which wall the particle has just left."""

    I = 1  # noqa: E741
    O = 2  # noqa: E741


@dataclass(frozen=True)
class BaseState:
    s: float
    sheet: Sheet

    def __post_init__(self):
        object.__setattr__(self, "sheet", Sheet(self.sheet))
        object.__setattr__(self, "s", float(self.s) % 1.0)


def base_step(b: BaseState, c: VelocityCircle, U: USet) -> BaseState:
    in_u = bool(U.contains(b.s))
    if b.sheet is Sheet.I:
        if in_u:
            raise InvalidState(f"s={b.s!r} lies in U and cannot leave the inner wall")
        return BaseState((-b.s) % 1.0, Sheet.O)
    if in_u:
        return BaseState((-b.s) % 1.0, Sheet.O)
    return BaseState((-b.s - c.gamma_norm) % 1.0, Sheet.I)


def base_step_inverse(b: BaseState, c: VelocityCircle, U: USet) -> BaseState:
    if b.sheet is Sheet.I:
        if U.contains(b.s):
            raise InvalidState(f"s={b.s!r} lies in U and cannot leave the inner wall")
        return BaseState((-b.s - c.gamma_norm) % 1.0, Sheet.O)
    prev = (-b.s) % 1.0
    return BaseState(prev, Sheet.O if U.contains(prev) else Sheet.I)


# ---------------------------------------------------------------------------
# rotation-angle classification


@dataclass(frozen=True)
class GammaClass:
    """Continued-fraction evidence about ``gamma``; never a proof."""

    kind: str  # "rational" | "diophantine-like" | "liouville-like"
    gamma: float
    partial_quotients: tuple
    fraction: Optional[Fraction] = None
    convergent_error: float = math.nan
    max_quotient: int = 0
    note: str = "numerical evidence"

    @property
    def label(self) -> str:
        if self.kind == "rational":
            return f"Rational({self.fraction.numerator}/{self.fraction.denominator})"
        return self.kind


#: a convergent closer than this is taken as an exact rational
RATIONAL_TOL = 1e-13
#: rational detection only accepts denominators up to this size
RATIONAL_MAX_DEN = 10_000
#: with double-precision parameters, convergents past this are noise
TRUSTED_DEN = 10**7


def continued_fraction(x, depth: int) -> list[int]:
    """Partial quotients of a (high-precision) real, stopping at exact zeros."""
    x = mpmath.mpf(x)
    eps = mpmath.mpf(10) ** (-(mpmath.mp.dps - 10))
    out = []
    for _ in range(depth):
        a = int(mpmath.floor(x))
        out.append(a)
        frac = x - a
        if frac < eps:
            break
        x = 1 / frac
    return out


def convergents(quotients: Sequence[int]) -> list[tuple[int, int]]:
    p0, q0, p1, q1 = 1, 0, quotients[0], 1
    out = [(p1, q1)]
    for a in quotients[1:]:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append((p1, q1))
    return out


def classify_value(gamma_mp, depth: int = 40) -> GammaClass:
    """Classify a real in ``[0, 1)`` from its continued fraction."""
    if not 1 <= depth <= 60:
        raise ValueError("depth must lie in [1, 60]")
    quotients = continued_fraction(gamma_mp, depth)
    conv = convergents(quotients)
    g = float(gamma_mp)
    for (pn, qn) in conv:
        err = float(abs(gamma_mp - mpmath.mpf(pn) / qn))
        if err < RATIONAL_TOL and qn <= RATIONAL_MAX_DEN:
            return GammaClass(
                "rational", g, tuple(quotients), Fraction(pn, qn), err, max(quotients[1:], default=0)
            )
    trusted = [k for k, (_, qn) in enumerate(conv) if qn < TRUSTED_DEN]
    liouville = any(
        conv[k][1] >= 10 and k + 1 < len(quotients) and quotients[k + 1] > conv[k][1]
        for k in trusted
    )
    last = conv[trusted[-1]] if trusted else conv[0]
    err = float(abs(gamma_mp - mpmath.mpf(last[0]) / last[1]))
    max_q = max((quotients[k] for k in range(1, len(quotients)) if k - 1 in trusted), default=0)
    return GammaClass(
        "liouville-like" if liouville else "diophantine-like",
        g,
        tuple(quotients),
        None,
        err,
        max_q,
    )


def classify_gamma(p: PhysicalParams, depth: int = 40) -> GammaClass:
    """Rational / Diophantine-like / Liouville-like evidence for ``gamma``."""
    require_valid(p)
    with mpmath.workdps(60):
        e1 = mpmath.mpf(p.eta1)
        if p.mode is Mode.TWO_PARTICLE:
            c = 1 / (1 + e1)
        else:
            e2 = mpmath.mpf(p.eta2)
            c = 1 / mpmath.sqrt((1 + 1 / e1) * (1 + 1 / e2))
        gamma = mpmath.acos(c) / mpmath.pi
        return classify_value(gamma, depth)
