"""Skew product over the outer-sheet return map and its diagnostics.

Between consecutive outer bounces the velocity moves by the first-return
map ``T_O`` (``s -> s + gamma`` through the inner rotor, ``s -> -s`` when
the chord misses it) and the impact point advances by ``alpha(s)``.  The
fiber coordinate ``phi`` and ``alpha`` are measured in turns.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._backend import kernels as _default_kernels
from .circle import BaseState, Sheet, USet, VelocityCircle, build_circle, compute_U
from .core import Integrals, PhysicalParams
from .errors import ConventionViolated, NonAlternating
from .geometry import beta_hat, chord_length, miss_advance, wrap_angle

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
#: orbit points closer than this to the boundary of U are nudged forward
U_EDGE_TOL = 1e-12
#: recurrence tolerance for periodic-orbit detection
PERIOD_TOL = 1e-11
#: rational-dependence search bounds
DEPENDENCE_MAX_COEF = 50
DEPENDENCE_TOL = 1e-9


@dataclass(frozen=True)
class SkewState:
    s: float
    phi: float
    winding: int = 0
    clock: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "s", float(self.s) % 1.0)
        turns = math.floor(self.phi)
        object.__setattr__(self, "phi", float(self.phi) - turns)
        object.__setattr__(self, "winding", int(self.winding) + int(turns))

    @property
    def lifted_phi(self) -> float:
        return self.winding + self.phi


@dataclass(frozen=True)
class OrbitDiagnostics:
    rotation_estimate: float
    discrepancy: float
    period: Optional[int] = None
    chi2: float = math.nan
    dof: int = 0
    dependence: Optional[tuple] = None
    note: str = "numerical evidence"


@dataclass
class SkewOrbit:
    s: np.ndarray
    phi: np.ndarray
    winding: np.ndarray
    clock: np.ndarray
    in_u: np.ndarray
    nudged: int

    @property
    def lifted_phi(self) -> np.ndarray:
        return self.winding + self.phi

    def states(self):
        for k in range(len(self.s)):
            yield SkewState(self.s[k], self.phi[k], int(self.winding[k]), self.clock[k])


def pack_circle(c: VelocityCircle) -> np.ndarray:
    """Center, e1, e2 and radius as the 10-float layout the kernels expect."""
    return np.concatenate([c.center, c.e1, c.e2, [c.radius]]).astype(float)


def pack_arcs(U: USet) -> np.ndarray:
    return np.array(U.arcs, dtype=float).reshape(-1, 2)


# ---------------------------------------------------------------------------
# fiber increment and ceiling


def outer_angles(s, c: VelocityCircle, p: PhysicalParams, F: float):
    """Outer-normal angle ``beta(s)`` and speed ``|v(s)|``."""
    x, y, z = c.point(s)
    w = np.sqrt(np.maximum(F - x * x / p.R**2 - y * y - z * z, 0.0))
    return np.arctan2(z, w), np.hypot(z, w)


def _split(s, c, U, p, ints):
    s = np.asarray(s, dtype=float)
    inside = np.asarray(U.contains(s), dtype=bool)
    beta, speed = outer_angles(s, c, p, ints.F)
    s2 = np.mod(-s - c.gamma_norm, 1.0)
    beta2, speed2 = outer_angles(s2, c, p, ints.F)
    return s, inside, beta, speed, beta2, speed2


def alpha_of_s(s, c: VelocityCircle, U: USet, p: PhysicalParams, ints: Integrals):
    """Fiber advance (turns, in ``(-1/2, 1/2]``) from the outer bounce at ``s``."""
    s, inside, beta, _, beta2, _ = _split(s, c, U, p, ints)
    out = np.empty(s.shape)
    if inside.any():
        out[inside] = np.asarray(miss_advance(beta[inside]))
    hit = ~inside
    if hit.any():
        out[hit] = np.asarray(wrap_angle(
            np.asarray(beta_hat(beta[hit], p.R)) + np.asarray(beta_hat(beta2[hit], p.R))
        ))
    out /= TWO_PI
    return float(out) if out.ndim == 0 else out


def tau_of_s(s, c: VelocityCircle, U: USet, p: PhysicalParams, ints: Integrals):
    """Flight time from the outer bounce at ``s`` to the next outer bounce."""
    s, inside, beta, speed, beta2, speed2 = _split(s, c, U, p, ints)
    out = np.empty(s.shape)
    if inside.any():
        out[inside] = 2.0 * np.cos(beta[inside]) / speed[inside]
    hit = ~inside
    if hit.any():
        out[hit] = (np.asarray(chord_length(beta[hit], p.R)) / speed[hit]
                    + np.asarray(chord_length(beta2[hit], p.R)) / speed2[hit])
    return float(out) if out.ndim == 0 else out


def _nudge(s: float, U: USet) -> float:
    if not U.empty and not U.full and U.boundary_distance(s) < U_EDGE_TOL:
        log.warning("s=%.17g within %.0e of the boundary of U; nudged", s, U_EDGE_TOL)
        return (s + U_EDGE_TOL) % 1.0
    return s


def skew_step(st: SkewState, c: VelocityCircle, U: USet, p: PhysicalParams,
              ints: Integrals) -> SkewState:
    """``(s, phi) -> (T_O s, phi + alpha(s))`` with the clock advanced by ``tau(s)``."""
    s = _nudge(st.s, U)
    a = alpha_of_s(s, c, U, p, ints)
    tau = tau_of_s(s, c, U, p, ints)
    s_next = -s if U.contains(s) else s + c.gamma_norm
    return SkewState(s_next, st.phi + a, st.winding, st.clock + tau)


def skew_orbit(st: SkewState, c: VelocityCircle, U: USet, p: PhysicalParams,
               ints: Integrals, n: int, kernels=None) -> SkewOrbit:
    """``n`` skew-product steps from ``st`` (``n + 1`` states)."""
    k = kernels or _default_kernels
    s = np.empty(n + 1)
    phi = np.empty(n + 1)
    wind = np.empty(n + 1, dtype=np.int64)
    clock = np.empty(n + 1)
    branch = np.empty(max(n, 1), dtype=np.int8)
    _, nudged = k.skew_orbit(pack_circle(c), p.R, ints.F, c.gamma_norm, pack_arcs(U),
                             st.s, st.phi, st.clock, n, s, phi, wind, clock, branch)
    wind += st.winding
    if nudged:
        log.warning("%d orbit points nudged off the boundary of U", nudged)
    return SkewOrbit(s, phi, wind, clock, branch[:n].astype(bool), int(nudged))


# ---------------------------------------------------------------------------
# base dynamics


def base_orbit(b0: BaseState, c: VelocityCircle, U: USet, n: int, kernels=None):
    """``n`` steps of the two-sheet base map; returns ``(s, sheet)`` arrays."""
    k = kernels or _default_kernels
    s = np.empty(n + 1)
    sheet = np.empty(n + 1, dtype=np.int8)
    got, nudged, status = k.base_orbit(b0.s, int(b0.sheet), c.gamma_norm, pack_arcs(U), n, s, sheet)
    if status:
        from .errors import InvalidState

        raise InvalidState(f"state {got - 1} on sheet I lies in U")
    if nudged:
        log.warning("%d base points nudged off the boundary of U", nudged)
    return s, sheet


def _circ_dist(a, b):
    return np.abs(np.mod(a - b + 0.5, 1.0) - 0.5)


def detect_period(b0: BaseState, c: VelocityCircle, U: USet, max_steps: int,
                  tol: float = PERIOD_TOL, kernels=None) -> Optional[int]:
    """First ``k >= 1`` with ``T^k b0 = b0`` (same sheet, ``s`` within ``tol``)."""
    chunk = 1 << 16
    done = 0
    b = b0
    while done < max_steps:
        n = min(chunk, max_steps - done)
        s, sheet = base_orbit(b, c, U, n, kernels)
        hit = np.nonzero((_circ_dist(s[1:], b0.s) < tol) & (sheet[1:] == int(b0.sheet)))[0]
        if hit.size:
            return done + int(hit[0]) + 1
        done += n
        b = BaseState(s[-1], Sheet(int(sheet[-1])))
    return None


def cover_bound(U: USet, gamma: float, max_n: int = 1 << 20) -> Optional[int]:
    """Smallest ``N`` with ``U, U - gamma, ..., U - (N-1) gamma`` covering the circle.

    Coverage is decided exactly on the arc endpoints: the union covers the
    circle iff every gap between sorted shifted arcs closes.  ``None`` if no
    ``N <= max_n`` works (empty U or a rational rotation that avoids U).
    """
    if U.empty:
        return None
    if U.full:
        return 1
    arcs = np.array(U.arcs, dtype=float)
    n = 1
    while n <= max_n:
        if _covers(arcs, gamma, n):
            lo = n // 2 + 1 if n > 1 else 1
            hi = n
            while lo < hi:
                mid = (lo + hi) // 2
                if _covers(arcs, gamma, mid):
                    hi = mid
                else:
                    lo = mid + 1
            return lo
        n *= 2
    return None


def _covers(arcs, gamma, n):
    k = np.arange(n)[:, None]
    starts = np.mod(arcs[None, :, 0] - k * gamma, 1.0).ravel()
    lengths = np.broadcast_to(arcs[None, :, 1], (n, len(arcs))).ravel()
    order = np.argsort(starts)
    starts, lengths = starts[order], lengths[order]
    ends = starts + lengths
    # sweep twice around so arcs wrapping past 1 are accounted for
    reach = np.maximum.accumulate(np.concatenate([ends, ends + 1.0]))
    begins = np.concatenate([starts, starts + 1.0])
    # open arcs: a gap exists where the next start is not strictly below the reach
    gaps = begins[1:] >= reach[:-1]
    # only gaps inside one full turn starting at the first arc matter
    window = begins[1:] <= starts[0] + 1.0
    return not np.any(gaps & window)


def alpha_n(s: float, c: VelocityCircle, U: USet, p: PhysicalParams, ints: Integrals,
            period: int) -> float:
    """Fiber rotation accumulated over ``period`` skew steps from ``s``."""
    orb = skew_orbit(SkewState(s, 0.0), c, U, p, ints, period)
    return float(orb.lifted_phi[-1] - orb.lifted_phi[0])


# ---------------------------------------------------------------------------
# averages and monotonicity


@dataclass(frozen=True)
class MeanAlpha:
    value: float
    coarse: float
    richardson_error: float
    symmetry_error: float
    n_quad: int


def mean_alpha(c: VelocityCircle, U: USet, p: PhysicalParams, ints: Integrals,
               n_quad: int = 1 << 14) -> MeanAlpha:
    """Average fiber advance over the circle (turns), by the periodic trapezoid rule.

    The integrand is smooth and periodic, so the rule converges
    geometrically; ``coarse`` is the value on ``n_quad // 2`` points.
    ``symmetry_error`` compares the result with twice the average of a
    single chord deflection.
    """
    if not U.empty:
        raise NonAlternating("mean_alpha needs the alternating case (U empty)")

    def avg(n):
        g = np.arange(n) / n
        return float(np.mean(alpha_of_s(g, c, U, p, ints)))

    fine = avg(2 * n_quad)
    value = avg(n_quad)
    g = np.arange(n_quad) / n_quad
    beta, _ = outer_angles(g, c, p, ints.F)
    single = 2.0 * float(np.mean(beta_hat(beta, p.R))) / TWO_PI
    return MeanAlpha(value, fine, abs(fine - value), abs(single - value), n_quad)


def tangential_min(c: VelocityCircle) -> float:
    """Minimum of ``z`` over the circle."""
    return float(c.center[2] - c.radius * math.hypot(c.e1[2], c.e2[2]))


@dataclass(frozen=True)
class MonotonicityScan:
    F: np.ndarray
    mean_alpha: np.ndarray
    strictly_decreasing: bool
    beta_hat_decreasing: bool
    w_increasing: bool


def alpha_monotonicity_scan(p: PhysicalParams, N: float, E: float, F_grid: Sequence[float],
                            n_quad: int = 1 << 14, n_points: int = 1000) -> MonotonicityScan:
    """Mean fiber advance along an increasing ``F`` grid at fixed ``(N, E)``.

    Needs ``z(s) > 0`` on the circle and ``U`` empty for every grid value.
    """
    F_grid = np.asarray(F_grid, dtype=float)
    if np.any(np.diff(F_grid) <= 0.0):
        raise ValueError("F grid must be strictly increasing")
    c = build_circle(p, Integrals(N, E, F_grid[0]))
    zmin = tangential_min(c)
    if not zmin > 0.0:
        raise ConventionViolated(f"tangential component changes sign on the circle (min z = {zmin:.6g})")
    means = []
    pts = np.arange(n_points) / n_points
    prev_bh = prev_w = None
    bh_ok = w_ok = True
    for F in F_grid:
        ints = Integrals(N, E, float(F))
        U = compute_U(c, p, ints)
        if not U.empty:
            raise NonAlternating(f"U is not empty at F={F!r}")
        means.append(mean_alpha(c, U, p, ints, n_quad).value)
        x, y, z = c.point(pts)
        w = np.sqrt(F - x * x / p.R**2 - y * y - z * z)
        bh = beta_hat(np.arctan2(z, w), p.R)
        if prev_bh is not None:
            bh_ok &= bool(np.all(bh < prev_bh))
            w_ok &= bool(np.all(w > prev_w))
        prev_bh, prev_w = bh, w
    means = np.array(means)
    return MonotonicityScan(F_grid, means, bool(np.all(np.diff(means) < 0.0)), bh_ok, w_ok)


def alpha_degree(c: VelocityCircle, U: USet, p: PhysicalParams, ints: Integrals,
                 n: int = 1 << 12) -> int:
    """Degree of ``alpha`` as a circle map: net turns of its lift over one loop."""
    g = np.arange(n + 1) / n
    a = alpha_of_s(g, c, U, p, ints)
    steps = np.mod(np.diff(a) + 0.5, 1.0) - 0.5
    return int(round(float(np.sum(steps))))


# ---------------------------------------------------------------------------
# equidistribution


def rational_dependence(alpha_bar: float, gamma: float, max_coef: int = DEPENDENCE_MAX_COEF,
                        tol: float = DEPENDENCE_TOL) -> Optional[tuple]:
    """Smallest ``(p, q)`` with ``p alpha_bar + q gamma`` within ``tol`` of an integer."""
    best = None
    for pp in range(1, max_coef + 1):
        q = np.arange(-max_coef, max_coef + 1)
        val = pp * alpha_bar + q * gamma
        err = np.abs(val - np.round(val))
        hits = q[err < tol]
        if hits.size:
            cand = (pp, int(hits[np.argmin(np.abs(hits))]))
            if best is None or abs(cand[0]) + abs(cand[1]) < abs(best[0]) + abs(best[1]):
                best = cand
    return best


def star_discrepancy_estimate(s, phi, bins: int = 64) -> float:
    """Largest box deviation over anchored boxes with corners on a ``bins`` grid.

    A lower bound for the star discrepancy, exact up to the grid spacing.
    """
    s = np.mod(np.asarray(s, dtype=float), 1.0)
    phi = np.mod(np.asarray(phi, dtype=float), 1.0)
    n = len(s)
    h, _, _ = np.histogram2d(s, phi, bins=bins, range=[[0.0, 1.0], [0.0, 1.0]])
    cum = np.cumsum(np.cumsum(h, axis=0), axis=1) / n
    edges = np.arange(1, bins + 1) / bins
    area = np.outer(edges, edges)
    return float(np.max(np.abs(cum - area)))


def chi2_uniform(s, phi, bins: int = 32) -> tuple[float, int]:
    """Pearson statistic of the 2-D bin counts against the uniform law."""
    h, _, _ = np.histogram2d(np.mod(s, 1.0), np.mod(phi, 1.0), bins=bins, range=[[0, 1], [0, 1]])
    expected = len(s) / bins**2
    return float(np.sum((h - expected) ** 2) / expected), bins * bins - 1


def equidistribution_test(s, phi, bins: int = 64, gamma: Optional[float] = None,
                          alpha_bar: Optional[float] = None, rotation_estimate: float = math.nan,
                          period: Optional[int] = None) -> OrbitDiagnostics:
    """Uniformity evidence for an orbit on the torus."""
    s = np.asarray(s)
    if len(s) < 10_000:
        raise ValueError("equidistribution_test needs at least 10^4 orbit points")
    chi2, dof = chi2_uniform(s, phi, min(bins, 32))
    dep = None
    if gamma is not None and alpha_bar is not None:
        dep = rational_dependence(alpha_bar, gamma)
    return OrbitDiagnostics(
        rotation_estimate=rotation_estimate,
        discrepancy=star_discrepancy_estimate(s, phi, bins),
        period=period,
        chi2=chi2,
        dof=dof,
        dependence=dep,
    )


def double_rotation(s0: float, phi0: float, gamma: float, alpha: float, n: int):
    """Orbit of ``(s, phi) -> (s + gamma, phi + alpha)``."""
    k = np.arange(n + 1)
    return np.mod(s0 + k * gamma, 1.0), np.mod(phi0 + k * alpha, 1.0)


# ---------------------------------------------------------------------------
# suspension flow


def time_weighted_average(orb: SkewOrbit, f=None) -> float:
    """Suspension-flow average of ``f(s, phi)`` held over each flight leg.

    ``sum f(s_k, phi_k) tau_k / sum tau_k``; defaults to ``cos(2 pi phi)``.
    """
    legs = np.diff(orb.clock)
    vals = np.cos(TWO_PI * orb.phi[:-1]) if f is None else f(orb.s[:-1], orb.phi[:-1])
    return float(np.sum(vals * legs) / np.sum(legs))


def stroboscopic_average(orb: SkewOrbit, offset: float, period: Optional[float] = None) -> float:
    """Average of ``cos(2 pi h / tau)`` sampled every ``period`` of flow time.

    ``h`` is the time since the last outer bounce and the first sample sits
    at fraction ``offset`` of the first leg.  ``period`` defaults to the
    mean return time.
    """
    clock = orb.clock
    legs = np.diff(clock)
    n = len(legs)
    period = float(clock[-1] - clock[0]) / n if period is None else period
    t0 = clock[0] + offset * legs[0]
    m = int((clock[-2] - t0) / period)
    times = t0 + period * np.arange(m)
    k = np.searchsorted(clock, times, side="right") - 1
    h = (times - clock[k]) / legs[k]
    return float(np.mean(np.cos(TWO_PI * h)))


@dataclass(frozen=True)
class SuspensionDemo:
    """Two starts on the same velocity ``s`` but different fiber/flow phases.

    Equal ``time_weighted`` values are evidence that the flow is ergodic;
    distinct ``strobe`` values show that the time-``mean_tau`` map is not,
    i.e. the flow has an eigenfunction and is not weakly mixing.
    """

    mean_tau: float
    time_weighted: tuple
    strobe: tuple


def suspension_demo(s0: float, c: VelocityCircle, U: USet, p: PhysicalParams, ints: Integrals,
                    n: int, phis=(0.0, 0.5), offsets=(0.0, 0.5), kernels=None) -> SuspensionDemo:
    orbs = [skew_orbit(SkewState(s0, ph), c, U, p, ints, n, kernels) for ph in phis]
    mean_tau = float(orbs[0].clock[-1] - orbs[0].clock[0]) / n
    return SuspensionDemo(
        mean_tau,
        tuple(time_weighted_average(o) for o in orbs),
        tuple(stroboscopic_average(orbs[0], off) for off in offsets),
    )
