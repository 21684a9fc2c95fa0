"""Two particles sharing one inner rotor; elastic outer wall.

Tangential components ``v`` (first particle) and ``u`` (second) are taken
at the inner wall and ``q = sqrt(eta) R omega``.  On the v-collision
section the state is ``(s, t)``: ``s`` on the velocity circle and ``t`` the
fraction of the second particle's period elapsed since its last inner
bounce.

The return map follows from counting u-collisions in one period of the
first particle.  With ``P = tau2 + tau3`` the second particle's bounces,
measured from its last one, fall at ``tau2, P, P + tau2, 2P, ...``, so the
count is odd iff ``t lambda + t_hat`` lies in ``(lambda, 1)``.  Three
cases result::

    t lambda + t_hat < lambda       even   (-s,     t + t_hat / lambda)
    lambda < t lambda + t_hat < 1   odd    (s + gamma, (tau2/tau3) t + (t_hat - lambda) / (1 - lambda))
    t lambda + t_hat > 1            even   (-s,     t + (t_hat - 1) / lambda)

``exact=False`` selects the simplified two-branch form, whose odd offset
is ``t_hat / (1 - lambda)`` and which has no third case.
"""
from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .circle import VelocityCircle, circle_from_planes
from .core import Integrals, Mode, PhysicalParams, require_valid
from .errors import OutOfRange, PreconditionUnmet, Unreachable
from .geometry import chord_length, outer_angle_from_inner
from .oracle import CartesianState, OracleParams, Section, extract_poincare, run

log = logging.getLogger(__name__)

BRANCH_TIE_TOL = 1e-12
W_GRID = 1 << 14
W_MARGIN = 0.9


class Branch(enum.Enum):
    EVEN = "even"
    ODD = "odd"


@dataclass(frozen=True, eq=False)
class TwoParticleBase:
    circle: VelocityCircle
    gamma_norm: float
    vn_fixed: float
    un_fixed: float
    R: float
    eta: float

    def velocities(self, s):
        """``(v, u, q)`` at ``s``."""
        return self.circle.point(s)


@dataclass(frozen=True)
class TwoParticleState:
    s: float
    t: float

    def __post_init__(self):
        object.__setattr__(self, "s", float(self.s) % 1.0)
        object.__setattr__(self, "t", float(self.t) % 1.0)


def two_particle_mirrors(eta: float):
    """Plane normal, v-collision mirror and u-collision mirror in ``(v, u, q)``."""
    a = math.sqrt(eta)
    return np.array([1.0, 1.0, a]), np.array([a, 0.0, -1.0]), np.array([0.0, a, -1.0])


def build_base(p: PhysicalParams, ints: Integrals) -> TwoParticleBase:
    """Velocity circle of the two-particle system.

    ``s = 0`` is the intersection with the v-collision mirror having the
    larger ``v`` (ties: larger ``q``).
    """
    if p.mode is not Mode.TWO_PARTICLE:
        raise ValueError("build_base expects two_particle parameters")
    require_valid(p, ints)
    n, vm, um = two_particle_mirrors(p.eta1)
    c = circle_from_planes(n, ints.N, ints.E, vm, um, prefer=(0, 2))
    return TwoParticleBase(c, c.gamma_norm, ints.vn_fixed, ints.un_fixed, p.R, p.eta1)


def return_time(tangential, normal, R: float):
    """Time between consecutive inner bounces of a particle (via one outer bounce).

    Components are taken at the inner wall.
    """
    tangential = np.asarray(tangential, dtype=float)
    normal = np.asarray(normal, dtype=float)
    if np.any(normal <= 0.0):
        raise Unreachable("a particle with zero normal speed never returns to the inner wall")
    beta = outer_angle_from_inner(tangential, normal, R)
    out = 2.0 * np.asarray(chord_length(beta, R)) / np.hypot(tangential, normal)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Timing:
    tau1: float
    tau2: float
    tau3: float
    lambda_hat: float
    t_hat: float


def timing(s, base: TwoParticleBase) -> Timing:
    """Return times and the derived ``lambda_hat``, ``t_hat`` at ``s`` (vectorised)."""
    s = np.asarray(s, dtype=float)
    v, u, _ = base.circle.point(s)
    _, u2, _ = base.circle.point(np.mod(-s - base.gamma_norm, 1.0))
    t1 = return_time(v, base.vn_fixed, base.R)
    t2 = return_time(u, base.un_fixed, base.R)
    t3 = return_time(u2, base.un_fixed, base.R)
    period = np.asarray(t2) + np.asarray(t3)
    lam = np.asarray(t2) / period
    ratio = np.asarray(t1) / period
    that = ratio - np.floor(ratio)
    if s.ndim == 0:
        return Timing(float(t1), float(t2), float(t3), float(lam), float(that))
    return Timing(t1, t2, t3, lam, that)


def two_step(st: TwoParticleState, base: TwoParticleBase, exact: bool = True):
    """One v-collision to the next; returns ``(state, branch)``."""
    tm = timing(st.s, base)
    lam, that = tm.lambda_hat, tm.t_hat
    x = st.t * lam + that
    if abs(x - lam) < BRANCH_TIE_TOL:
        log.warning("branch tie at s=%.17g, t=%.17g; taking the odd branch", st.s, st.t)
        odd = True
    else:
        odd = x > lam and (x < 1.0 or not exact)
    if odd:
        rho = tm.tau2 / tm.tau3
        off = (that - lam) / (1.0 - lam) if exact else that / (1.0 - lam)
        return TwoParticleState(st.s + base.gamma_norm, rho * st.t + off), Branch.ODD
    if exact and x >= 1.0:
        return TwoParticleState(-st.s, st.t + (that - 1.0) / lam), Branch.EVEN
    return TwoParticleState(-st.s, st.t + that / lam), Branch.EVEN


def two_orbit(st: TwoParticleState, base: TwoParticleBase, n: int, exact: bool = True):
    """``n`` steps; returns arrays ``s``, ``t`` (length ``n + 1``) and branches (length ``n``)."""
    s = np.empty(n + 1)
    t = np.empty(n + 1)
    branches = []
    s[0], t[0] = st.s, st.t
    for k in range(n):
        st, b = two_step(st, base, exact)
        s[k + 1], t[k + 1] = st.s, st.t
        branches.append(b)
    return s, t, branches


def unified_t(st: TwoParticleState, base: TwoParticleBase, s_next: float) -> float:
    """``(t tau2(s) + t_hat (tau2(s) + tau3(s))) / tau2(s')`` reduced mod 1."""
    tm = timing(st.s, base)
    tau2_next = timing(s_next, base).tau2
    return ((st.t * tm.tau2 + tm.t_hat * (tm.tau2 + tm.tau3)) / tau2_next) % 1.0


# ---------------------------------------------------------------------------
# persistence of the odd branch


def n_epsilon(eps: float) -> int:
    """Guaranteed length of the odd run for initial phases within ``eps`` of 1/2."""
    if not 0.0 < eps < 0.125:
        raise OutOfRange(f"eps must lie in (0, 1/8), got {eps!r}")
    a = math.log(2.0 - 2.0 * eps) / math.log(1.0 + 3.0 * eps)
    b = math.log(8.0 * eps) / math.log(1.0 - 3.0 * eps)
    return max(int(math.floor(min(a, b))) - 2, 0)


def _circ_abs(x):
    return np.abs(np.mod(np.asarray(x) + 0.5, 1.0) - 0.5)


@dataclass(frozen=True)
class BoundCheck:
    name: str
    worst: float
    limit: float
    s_worst: float

    @property
    def ok(self) -> bool:
        return self.worst < self.limit


def check_w_bounds(base: TwoParticleBase, eps: float, grid: int = W_GRID,
                   margin: float = 1.0) -> list[BoundCheck]:
    """Evaluate the four timing bounds (plus the exact-map offset) on an ``s`` grid.

    Each check reports the largest deviation and where it occurs; the bound
    holds when ``worst < margin * eps``.
    """
    s = np.arange(grid) / grid
    tm = timing(s, base)
    dev = {
        "t_hat": np.abs(tm.t_hat - 0.5),
        "lambda_hat": np.abs(tm.lambda_hat - 0.5),
        "tau2/tau3": np.abs(tm.tau2 / tm.tau3 - 1.0),
        "t_hat/(1-lambda_hat)": _circ_abs(tm.t_hat / (1.0 - tm.lambda_hat)),
        "(t_hat-lambda_hat)/(1-lambda_hat)": _circ_abs((tm.t_hat - tm.lambda_hat) / (1.0 - tm.lambda_hat)),
    }
    out = []
    for name, d in dev.items():
        j = int(np.argmax(d))
        out.append(BoundCheck(name, float(d[j]), margin * eps, float(s[j])))
    return out


@dataclass(frozen=True)
class WConstruction:
    K: float
    vn: float
    un: float
    eps_prime: float
    base: TwoParticleBase
    bounds: tuple


def construct_W(eps: float, R: float, eta: float, N: float = 0.0, E: float = 1.0,
                eps_prime: Optional[float] = None, K_start: float = 1.0, K_max: float = 2.0**40,
                grid: int = W_GRID, margin: float = W_MARGIN) -> WConstruction:
    """Double ``K'`` until the timing bounds hold with ``margin`` on an ``s`` grid.

    Normal speeds are ``K' +- eps'/2``, inside the ``eps'`` window around ``K'``.
    """
    eps_prime = eps if eps_prime is None else eps_prime
    p = PhysicalParams(R, eta, mode=Mode.TWO_PARTICLE)
    K = K_start
    last = None
    while K <= K_max:
        vn, un = K + 0.5 * eps_prime, K - 0.5 * eps_prime
        if un > 0.0:
            base = build_base(p, Integrals(N, E, vn_fixed=vn, un_fixed=un))
            checks = check_w_bounds(base, eps, grid, margin)
            if all(c.ok for c in checks):
                return WConstruction(K, vn, un, eps_prime, base, tuple(checks))
            last = checks
        K *= 2.0
    failing = [c for c in (last or []) if not c.ok]
    msg = ", ".join(f"{c.name} = {c.worst:.3g} at s = {c.s_worst:.6f}" for c in failing)
    raise PreconditionUnmet(f"no K' <= {K_max:g} satisfies the timing bounds: {msg}")


@dataclass
class SampleResult:
    s0: float
    t0: float
    survived_steps: int
    bounds_ok: bool
    first_even_step: Optional[int]
    excluded: bool = False
    max_s_error: float = 0.0

    def as_dict(self) -> dict:
        return {
            "s0": self.s0,
            "t0": self.t0,
            "survived_steps": self.survived_steps,
            "bounds_ok": self.bounds_ok,
            "first_even_step": self.first_even_step,
            "excluded": self.excluded,
        }


@dataclass
class PersistenceReport:
    eps: float
    n_epsilon: int
    K: float
    vn: float
    un: float
    gamma_norm: float
    samples: list = field(default_factory=list)

    @property
    def included(self):
        return [r for r in self.samples if not r.excluded]

    @property
    def survival_rate(self) -> float:
        inc = self.included
        if not inc:
            return math.nan
        return sum(r.survived_steps >= self.n_epsilon and r.bounds_ok for r in inc) / len(inc)

    def as_dict(self) -> dict:
        return {
            "eps": self.eps,
            "n_epsilon": self.n_epsilon,
            "K_prime": self.K,
            "vn_fixed": self.vn,
            "un_fixed": self.un,
            "gamma_norm": self.gamma_norm,
            "survival_rate": self.survival_rate,
            "samples": [r.as_dict() for r in self.samples],
        }


def run_sample(s0: float, t0: float, base: TwoParticleBase, eps: float, n_eps: int,
               exact: bool = True, horizon: Optional[int] = None, s_tol: float = 1e-10) -> SampleResult:
    """Iterate one initial condition and score it against the persistence claims."""
    horizon = max(horizon or 4 * n_eps, n_eps)
    excluded = not abs(t0 - 0.5) < eps
    st = TwoParticleState(s0, t0)
    survived = 0
    alive = True
    bounds_ok = True
    first_even = None
    worst_s = 0.0
    for k in range(horizon):
        if k < n_eps:
            lo = 0.5 * (1.0 - 3.0 * eps) ** (k + 1)
            hi = 0.5 * (1.0 + 3.0 * eps) ** (k + 1)
            bounds_ok &= lo < st.t < hi
            err = float(_circ_abs(st.s - (s0 + k * base.gamma_norm)))
            worst_s = max(worst_s, err)
        nxt, br = two_step(st, base, exact)
        if br is Branch.EVEN and first_even is None:
            first_even = k
        if k < n_eps and alive:
            alive = br is Branch.ODD and err <= s_tol
            survived += alive
        st = nxt
        if first_even is not None and k >= n_eps:
            break
    return SampleResult(s0, t0, survived, bool(bounds_ok), first_even, excluded, worst_s)


def _sample_job(args):
    return run_sample(*args)


def persistence_experiment(eps: float, W: WConstruction, samples: Sequence[tuple],
                           exact: bool = True, executor: Optional[Executor] = None) -> PersistenceReport:
    """Run each ``(s0, t0)`` for ``N_eps`` steps and report odd-branch survival.

    The timing bounds are re-checked first; :class:`PreconditionUnmet`
    names the failing bound and where it fails.
    """
    n_eps = n_epsilon(eps)
    failing = [c for c in check_w_bounds(W.base, eps) if not c.ok]
    if failing:
        c = failing[0]
        raise PreconditionUnmet(f"bound {c.name} fails: {c.worst:.3g} >= {c.limit:.3g} at s = {c.s_worst:.6f}")
    jobs = [(float(s0), float(t0), W.base, eps, n_eps, exact) for s0, t0 in samples]
    results = list(executor.map(_sample_job, jobs)) if executor else [_sample_job(j) for j in jobs]
    return PersistenceReport(eps, n_eps, W.K, W.vn, W.un, W.base.gamma_norm, results)


def sample_initial_set(eps: float, n: int, uniform) -> list[tuple]:
    """``n`` points with ``s`` uniform and ``|t - 1/2| < eps``; ``uniform()`` gives [0, 1)."""
    out = []
    for _ in range(n):
        s0 = uniform()
        t0 = 0.5 + eps * (2.0 * uniform() - 1.0)
        if abs(t0 - 0.5) >= eps:
            t0 = 0.5
        out.append((s0, t0))
    return out


# ---------------------------------------------------------------------------
# Cartesian cross-check


def cartesian_initial(st: TwoParticleState, base: TwoParticleBase, theta_u: float = 2.0):
    """Cartesian state just after a v-collision at ``(s, t)``.

    Returns the state at clock 0 and the time of the last u-collision.
    """
    R = base.R
    v, u, q = (float(a) for a in base.circle.point(st.s))
    omega = q / (math.sqrt(base.eta) * R)
    t_last = -st.t * return_time(u, base.un_fixed, R)
    c, sn = math.cos(theta_u), math.sin(theta_u)
    upos = (R * c, R * sn)
    uvel = (base.un_fixed * c - u * sn, base.un_fixed * sn + u * c)
    lone = CartesianState([upos], [uvel], [0.0, 0.0], t_last)
    moved = run(lone, OracleParams(R, (1.0, 1.0), (False, False)), n_events=8, t_max=0.0).final
    state = CartesianState(
        [(R, 0.0), moved.pos[0]],
        [(base.vn_fixed, v), moved.vel[0]],
        [omega, 0.0],
        0.0,
    )
    return state, t_last


@dataclass
class OracleCheck:
    n_steps: int
    max_ds: float
    max_dt: float
    branches_match: bool
    n_events: int
    s_reduced: np.ndarray = field(repr=False, default=None)
    t_reduced: np.ndarray = field(repr=False, default=None)
    s_oracle: np.ndarray = field(repr=False, default=None)
    t_oracle: np.ndarray = field(repr=False, default=None)


def oracle_check(st: TwoParticleState, base: TwoParticleBase, n_steps: int,
                 exact: bool = True) -> OracleCheck:
    """Replay ``n_steps`` v-collisions in the Cartesian simulator and compare."""
    p = PhysicalParams(base.R, base.eta, mode=Mode.TWO_PARTICLE)
    init, t_last = cartesian_initial(st, base)
    s_red, t_red, branches = two_orbit(st, base, n_steps, exact)
    tm = timing(s_red[:-1], base)
    horizon = float(np.sum(tm.tau1)) + 0.5 * float(np.min(tm.tau1))
    lg = run(init, OracleParams(base.R, (base.eta, 1.0), (True, False)),
             n_events=8 * n_steps + 64, t_max=horizon)
    sec = extract_poincare(lg, Section.INNER_V_IMPACTS, p, base.circle, t_last_u=t_last)
    m = min(n_steps, len(sec.s))
    ds = float(np.max(_circ_abs(sec.s[:m] - s_red[1:m + 1]), initial=0.0))
    dt = float(np.max(_circ_abs(sec.coord[:m] - t_red[1:m + 1]), initial=0.0))
    parity = u_collision_parity(lg)[:m]
    want = [b is Branch.ODD for b in branches[:m]]
    return OracleCheck(m, ds, dt, parity == want and m == n_steps, len(lg),
                       s_red[1:m + 1], t_red[1:m + 1], sec.s[:m], sec.coord[:m])


def u_collision_parity(lg) -> list[bool]:
    """Odd number of u-collisions between consecutive v-collisions, per v-interval."""
    out = []
    count = 0
    for i in range(len(lg)):
        if lg.wall[i] != 0:
            continue
        if lg.particle[i] == 1:
            count += 1
        else:
            out.append(count % 2 == 1)
            count = 0
    return out
