"""Command-line entry point.

Usage::

    rotor-annulus VERB --config run.json [--out DIR] [--seed N] [--steps N] [--oracle-check]

Verbs: ``base``, ``single``, ``two``, ``oracle``, ``classify``, ``sweep``,
``validate``.  Exit codes: 0 success, 2 configuration or domain error,
3 precondition unmet, 4 numerical drift.  See README.md for the config
schema and every output file.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any

import numpy as np

from . import io
from .circle import (
    BaseState,
    Sheet,
    build_circle,
    classify_gamma,
    compute_U,
    u_reflection_error,
)
from .core import Integrals, Mode, PhysicalParams, validate_params
from .errors import (
    ConfigError,
    ConventionViolated,
    NonAlternating,
    NumericalDrift,
    PreconditionUnmet,
    RotorAnnulusError,
    Unreachable,
)
from .oracle import (
    CartesianState,
    OracleParams,
    Section,
    containment_error,
    conservation_drift,
    double_rotor_state,
    extract_poincare,
    run,
    single_rotor_state,
    write_events_csv,
)
from .rng import SplitMix64
from .single import SingleRotorState, fiber_rotation_angle, orbit as single_orbit, state_from_integrals
from .skew import (
    SkewState,
    cover_bound,
    detect_period,
    equidistribution_test,
    mean_alpha,
    rational_dependence,
    skew_orbit,
)
from .two import (
    build_base,
    cartesian_initial,
    check_w_bounds,
    construct_W,
    n_epsilon,
    oracle_check,
    persistence_experiment,
    sample_initial_set,
    TwoParticleState,
    WConstruction,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_DRIFT = 4

MAX_SWEEP_CELLS = 10**6
DEFAULT_STEPS = 10_000
PERIOD_SEARCH_CAP = 10**5
SWEEP_PERIOD_CAP = 10**4
ORACLE_CHECK_CAP = 10_000

_REQUIRED = object()
_KINDS = {float: "a number", int: "an integer", str: "a string", bool: "a boolean",
          list: "a list", dict: "an object"}


# ---------------------------------------------------------------------------
# configuration


class Config:
    """Parsed JSON config that reports problems with the line they sit on."""

    def __init__(self, data: dict, text: str = "", path: str = "<config>"):
        if not isinstance(data, dict):
            raise ConfigError(f"{path}:1: top level must be a JSON object")
        self.data = data
        self.text = text
        self.path = path

    @classmethod
    def load(cls, path: str) -> "Config":
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
        return cls(data, text, path)

    def line_of(self, key: str) -> int:
        """Line where the dotted ``key`` is written (its nearest present parent if absent)."""
        pos, line = 0, 1
        for part in key.split("."):
            m = re.compile(r'"' + re.escape(part) + r'"\s*:').search(self.text, pos)
            if m is None:
                return line
            pos = m.end()
            line = self.text.count("\n", 0, m.start()) + 1
        return line

    def error(self, key: str, msg: str) -> ConfigError:
        return ConfigError(f"{self.path}:{self.line_of(key)}: {key}: {msg}")

    def has(self, key: str) -> bool:
        node = self.data
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                return False
            node = node[part]
        return True

    def get(self, key: str, kind=float, default: Any = _REQUIRED):
        node = self.data
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                if default is _REQUIRED:
                    raise self.error(key, "required field is missing")
                return default
            node = node[part]
        if node is None and default is not _REQUIRED:
            return default
        ok = isinstance(node, kind) and not (kind in (int, float) and isinstance(node, bool))
        if kind is float and isinstance(node, int) and not isinstance(node, bool):
            node, ok = float(node), True
        if kind is float and ok and not math.isfinite(node):
            ok = False
        if not ok:
            raise self.error(key, f"expected {_KINDS[kind]}, got {json.dumps(node)}")
        return node


def _params(cfg: Config, mode: Mode) -> PhysicalParams:
    eta2 = cfg.get("params.eta2", float) if mode is Mode.DOUBLE_ROTOR else None
    p = PhysicalParams(cfg.get("params.R", float), cfg.get("params.eta1", float), eta2, mode)
    _check(cfg, validate_params(p), "params")
    return p


def _integrals(cfg: Config, p: PhysicalParams) -> Integrals:
    mode = p.mode
    ints = Integrals(
        cfg.get("integrals.N", float),
        cfg.get("integrals.E", float),
        cfg.get("integrals.F", float) if mode is Mode.DOUBLE_ROTOR else None,
        cfg.get("integrals.vn_fixed", float) if mode is not Mode.DOUBLE_ROTOR else None,
        cfg.get("integrals.un_fixed", float) if mode is Mode.TWO_PARTICLE else None,
    )
    _check(cfg, validate_params(p, ints), "integrals")
    return ints


def _check(cfg: Config, report: list, section: str) -> None:
    if report:
        lines = []
        for msg in report:
            field = re.match(r"(\w+)", msg).group(1)
            key = f"{section}.{field}" if cfg.has(f"{section}.{field}") else section
            lines.append(f"{cfg.path}:{cfg.line_of(key)}: {msg}")
        raise ConfigError("\n".join(lines))


def _mode(cfg: Config, default: str | None = None) -> Mode:
    name = cfg.get("mode", str, default)
    try:
        return Mode(name)
    except ValueError:
        raise cfg.error("mode", f"unknown mode {name!r}; expected one of "
                        + ", ".join(m.value for m in Mode)) from None


def _seed(cfg: Config, args) -> int:
    if args.seed is not None:
        return args.seed
    seed = cfg.get("seed", int, 0)
    if not 0 <= seed < 2**64:
        raise cfg.error("seed", "must be an unsigned 64-bit integer")
    return seed


def _steps(cfg: Config, args, key: str = "steps", default: int = DEFAULT_STEPS) -> int:
    n = args.steps if args.steps is not None else cfg.get(key, int, default)
    if n < 1:
        raise ConfigError(f"{cfg.path}:{cfg.line_of(key)}: {key} must be at least 1, got {n}")
    return n


def _initial(cfg: Config, key: str, rng: SplitMix64) -> float:
    """``initial.<key>`` if given, else the next uniform draw."""
    x = rng.uniform()
    return cfg.get(f"initial.{key}", float, x)


def _path(out: str, name: str) -> str:
    return os.path.join(out, name)


# ---------------------------------------------------------------------------
# verbs


def cmd_validate(cfg: Config, args) -> dict:
    """Check the config and print the parameter report."""
    mode = _mode(cfg, "double_rotor")
    p = _params(cfg, mode)
    if cfg.has("integrals"):
        _integrals(cfg, p)
    print(f"{cfg.path}: ok ({mode.value})")
    return {}


def cmd_classify(cfg: Config, args) -> dict:
    mode = _mode(cfg, "double_rotor")
    p = _params(cfg, mode)
    depth = cfg.get("depth", int, 40)
    if not 1 <= depth <= 60:
        raise cfg.error("depth", "must lie in [1, 60]")
    g = classify_gamma(p, depth)
    out = {
        "mode": mode,
        "gamma_norm": g.gamma,
        "classification": g.label,
        "kind": g.kind,
        "fraction": g.fraction,
        "partial_quotients": list(g.partial_quotients),
        "convergent_error": g.convergent_error,
        "max_quotient": g.max_quotient,
        "note": g.note,
    }
    path = _path(args.out, "classification.json")
    io.write_json(out, path)
    print(f"gamma_norm = {io.fmt(g.gamma)}  {g.label}")
    return {"classification": path}


def _max_gap(s) -> float:
    x = np.sort(np.mod(s, 1.0))
    return float(max(np.max(np.diff(x), initial=0.0), x[0] + 1.0 - x[-1]))


def cmd_base(cfg: Config, args) -> dict:
    """Velocity circle, skew-product orbit and its diagnostics (double rotor)."""
    p = _params(cfg, Mode.DOUBLE_ROTOR)
    ints = _integrals(cfg, p)
    rng = SplitMix64(_seed(cfg, args))
    steps = _steps(cfg, args)
    c = build_circle(p, ints)
    U = compute_U(c, p, ints)
    g = classify_gamma(p)
    s0 = _initial(cfg, "s", rng)
    phi0 = _initial(cfg, "phi", rng)

    circle_json = {
        "R": p.R,
        "eta1": p.eta1,
        "eta2": p.eta2,
        "N": ints.N,
        "E": ints.E,
        "F": ints.F,
        "center": c.center,
        "radius": c.radius,
        "anchor": c.point(0.0),
        "gamma_norm": c.gamma_norm,
        "classification": g.label,
        "partial_quotients": list(g.partial_quotients),
        "U": U.endpoints(),
        "U_measure": U.measure,
        "U_reflection_error": u_reflection_error(U, c.gamma_norm) if not U.empty else 0.0,
    }

    orb = skew_orbit(SkewState(s0, phi0), c, U, p, ints, steps)
    rows = zip(range(steps + 1), orb.s, orb.phi, orb.winding, orb.clock)

    n_cover = cover_bound(U, c.gamma_norm)
    cap = cfg.get("period_search", int, PERIOD_SEARCH_CAP)
    search = 4 * n_cover + 2 if n_cover else cap
    b0 = BaseState(s0, Sheet.O)
    period = detect_period(b0, c, U, search)
    diag = {
        "initial": {"s": s0, "phi": phi0},
        "steps": steps,
        "alternating": U.empty,
        "cover_bound": n_cover,
        "period": period,
        "period_search_steps": search,
        "max_gap": _max_gap(orb.s),
        "rotation_estimate": float(orb.lifted_phi[-1] - orb.lifted_phi[0]) / steps,
        "mean_tau": float(orb.clock[-1] - orb.clock[0]) / steps,
        "in_u_fraction": float(np.mean(orb.in_u[:-1])) if steps else 0.0,
        "nudged": orb.nudged,
        "mean_alpha": None,
        "discrepancy": None,
        "chi2": None,
        "dof": None,
        "dependence": None,
        "note": "numerical evidence",
    }
    if U.empty:
        ma = mean_alpha(c, U, p, ints)
        diag["mean_alpha"] = {
            "value": ma.value,
            "richardson_error": ma.richardson_error,
            "symmetry_error": ma.symmetry_error,
            "n_quad": ma.n_quad,
        }
        dep = rational_dependence(ma.value, c.gamma_norm)
        diag["dependence"] = list(dep) if dep else None
    if steps + 1 >= 10_000:
        d = equidistribution_test(orb.s, orb.phi)
        diag.update(discrepancy=d.discrepancy, chi2=d.chi2, dof=d.dof)
    if args.oracle_check:
        diag["oracle_check"] = _base_oracle_check(orb, c, p, ints, min(steps, ORACLE_CHECK_CAP))

    files = {
        "circle": _path(args.out, "circle.json"),
        "orbit": _path(args.out, "orbit.csv"),
        "diagnostics": _path(args.out, "diagnostics.json"),
    }
    io.write_json(circle_json, files["circle"])
    io.write_csv(files["orbit"], ["step", "s", "phi", "winding", "clock"], rows)
    io.write_json(diag, files["diagnostics"])
    print(f"gamma_norm = {io.fmt(c.gamma_norm)}  {g.label}  U = {U.endpoints()}  period = {period}")
    return files


def _base_oracle_check(orb, c, p, ints, n) -> dict:
    init = double_rotor_state(orb.s[0], orb.lifted_phi[0], c, p, ints.F)
    lg = run(init, OracleParams.from_physical(p), n_events=4 * n + 16,
             t_max=float(orb.clock[n]) + 1e-9)
    sec = extract_poincare(lg, Section.OUTER_IMPACTS, p, c)
    m = min(n, len(sec.s))
    ds = np.abs(np.mod(sec.s[:m] - orb.s[1:m + 1] + 0.5, 1.0) - 0.5)
    dphi = np.abs(sec.coord[:m] - orb.lifted_phi[1:m + 1])
    dt = np.abs(sec.time[:m] - orb.clock[1:m + 1])
    return {
        "n_steps": m,
        "max_ds": float(np.max(ds, initial=0.0)),
        "max_dphi": float(np.max(dphi, initial=0.0)),
        "max_dclock": float(np.max(dt, initial=0.0)),
    }


def _single_initial(cfg: Config, p: PhysicalParams, rng: SplitMix64) -> SingleRotorState:
    phi = _initial(cfg, "phi", rng) * 2.0 * math.pi
    if cfg.has("integrals"):
        ints = _integrals(cfg, p)
        branch = cfg.get("initial.branch", int, 0)
        try:
            return state_from_integrals(ints.N, ints.E, ints.vn_fixed, p, branch, phi)
        except ValueError as exc:
            raise cfg.error("integrals", str(exc)) from None
    vt = cfg.get("initial.vt", float)
    omega = cfg.get("initial.omega", float)
    if cfg.has("initial.vn"):
        return SingleRotorState(cfg.get("initial.vn", float), vt, omega, phi)
    return SingleRotorState.from_outer(vt, cfg.get("initial.vn_out", float), omega, p.R, phi)


def cmd_single(cfg: Config, args) -> dict:
    """Single-rotor orbit and its fiber rotation angle."""
    p = _params(cfg, Mode.SINGLE_ROTOR)
    rng = SplitMix64(_seed(cfg, args))
    steps = _steps(cfg, args, default=1000)
    st = _single_initial(cfg, p, rng)
    states = single_orbit(st, p, steps)
    angle = fiber_rotation_angle(st, p)
    N0, E0 = st.integrals(p)
    integ = np.array([s.integrals(p) for s in states])
    summary = {
        "R": p.R,
        "eta1": p.eta1,
        "initial": {"vn": st.vn, "vt": st.vt, "omega": st.omega, "phi": st.phi},
        "N": N0,
        "E": E0,
        "vn_fixed": st.vn,
        "fiber_rotation_angle": angle,
        "rotation_turns": angle / (2.0 * math.pi),
        "max_integral_drift": float(np.max(np.abs(integ - [N0, E0]), initial=0.0)),
        # states[3] follows the second inner bounce
        "period2_error": max(abs(states[3].vt - st.vt), abs(states[3].omega - st.omega))
        if steps >= 3 else None,
    }
    if args.oracle_check:
        n = min(steps, ORACLE_CHECK_CAP)
        lg = run(single_rotor_state(st.vn, st.vt, st.omega, p.R, st.unwrapped_phi),
                 OracleParams.from_physical(p), n_events=n + 1)
        sec = extract_poincare(lg, Section.OUTER_IMPACTS, p)
        inc = np.diff(sec.coord) * 2.0 * math.pi
        walls = lg.wall[:n]
        summary["oracle_check"] = {
            "n_events": len(lg),
            "max_angle_error": float(np.max(np.abs(inc - angle), initial=0.0)),
            "walls_alternate": bool(np.all(walls[1:] != walls[:-1])),
        }
    files = {"orbit": _path(args.out, "single_orbit.csv"),
             "summary": _path(args.out, "single_summary.json")}
    io.write_csv(files["orbit"], ["step", "next_wall", "vt", "omega", "phi", "winding"],
                 ((k, s.phase.value, s.vt, s.omega, s.phi, s.winding) for k, s in enumerate(states)))
    io.write_json(summary, files["summary"])
    print(f"fiber rotation angle = {io.fmt(angle)} rad")
    return files


def cmd_two(cfg: Config, args) -> dict:
    """Odd-branch persistence experiment for two particles."""
    eps = cfg.get("eps", float)
    n_eps = n_epsilon(eps)
    R = cfg.get("params.R", float)
    eta = cfg.get("params.eta1", float, 1.0)
    _check(cfg, validate_params(PhysicalParams(R, eta, mode=Mode.TWO_PARTICLE)), "params")
    N = cfg.get("integrals.N", float, 0.0)
    E = cfg.get("integrals.E", float, 1.0)
    exact = cfg.get("exact", bool, True)
    n_samples = cfg.get("samples", int, 100)
    workers = cfg.get("workers", int, 1)
    rng = SplitMix64(_seed(cfg, args))

    if cfg.has("K_prime"):
        K = cfg.get("K_prime", float)
        ep = cfg.get("eps_prime", float, eps)
        vn, un = K + 0.5 * ep, K - 0.5 * ep
        p = PhysicalParams(R, eta, mode=Mode.TWO_PARTICLE)
        ints = Integrals(N, E, vn_fixed=vn, un_fixed=un)
        _check(cfg, validate_params(p, ints), "integrals")
        base = build_base(p, ints)
        W = WConstruction(K, vn, un, ep, base, tuple(check_w_bounds(base, eps)))
    else:
        W = construct_W(eps, R, eta, N, E, cfg.get("eps_prime", float, None))

    samples = sample_initial_set(eps, n_samples, rng.uniform)
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            report = persistence_experiment(eps, W, samples, exact, ex)
    else:
        report = persistence_experiment(eps, W, samples, exact)

    out = report.as_dict()
    out["exact_map"] = exact
    out["bounds"] = [{"name": b.name, "worst": b.worst, "limit": b.limit, "s_worst": b.s_worst}
                     for b in W.bounds]
    files = {"report": _path(args.out, "two_report.json")}
    if args.oracle_check:
        s0, t0 = samples[0]
        steps = args.steps if args.steps is not None else n_eps
        oc = oracle_check(TwoParticleState(s0, t0), W.base, steps, exact)
        out["oracle_check"] = {
            "s0": s0,
            "t0": t0,
            "n_steps": oc.n_steps,
            "n_events": oc.n_events,
            "max_ds": oc.max_ds,
            "max_dt": oc.max_dt,
            "branches_match": oc.branches_match,
        }
        files["trace"] = _path(args.out, "two_oracle_trace.csv")
        io.write_csv(files["trace"], ["step", "s_reduced", "t_reduced", "s_oracle", "t_oracle"],
                     zip(range(1, oc.n_steps + 1), oc.s_reduced, oc.t_reduced, oc.s_oracle, oc.t_oracle))
    io.write_json(out, files["report"])
    print(f"n_epsilon = {n_eps}  K' = {io.fmt(W.K)}  survival = {io.fmt(report.survival_rate)}")
    return files


def _oracle_initial(cfg: Config, mode: Mode, p: PhysicalParams, rng: SplitMix64):
    """Cartesian start, plus ``(circle, t_last_u)`` when the section is derivable."""
    if cfg.has("state"):
        pos = cfg.get("state.pos", list)
        vel = cfg.get("state.vel", list)
        omega = cfg.get("state.omega", list, [0.0, 0.0])
        try:
            st = CartesianState(pos, vel, omega)
        except (ValueError, TypeError) as exc:
            raise cfg.error("state", f"malformed state: {exc}") from None
        return st, None, None
    if mode is Mode.DOUBLE_ROTOR:
        ints = _integrals(cfg, p)
        c = build_circle(p, ints)
        s0, phi0 = _initial(cfg, "s", rng), _initial(cfg, "phi", rng)
        return double_rotor_state(s0, phi0, c, p, ints.F), c, None
    if mode is Mode.SINGLE_ROTOR:
        st = _single_initial(cfg, p, rng)
        return single_rotor_state(st.vn, st.vt, st.omega, p.R, st.unwrapped_phi), None, None
    ints = _integrals(cfg, p)
    base = build_base(p, ints)
    s0, t0 = _initial(cfg, "s", rng), _initial(cfg, "t", rng)
    st, t_last = cartesian_initial(TwoParticleState(s0, t0), base)
    return st, base.circle, t_last


def cmd_oracle(cfg: Config, args) -> dict:
    """Event-driven Cartesian run with conservation diagnostics."""
    mode = _mode(cfg)
    p = _params(cfg, mode)
    rng = SplitMix64(_seed(cfg, args))
    n = _steps(cfg, args, key="events")
    init, circle, t_last = _oracle_initial(cfg, mode, p, rng)
    lg = run(init, OracleParams.from_physical(p), n_events=n)
    drift = conservation_drift(lg, p)
    tol = cfg.get("drift_tol", float, 1e-10)
    s_values = None
    if circle is not None:
        section = Section.OUTER_IMPACTS if mode is Mode.DOUBLE_ROTOR else Section.INNER_V_IMPACTS
        sec = extract_poincare(lg, section, p, circle, t_last_u=t_last)
        s_values = dict(zip(sec.event_index.tolist(), sec.s.tolist()))
    files = {"events": _path(args.out, "events.csv"), "summary": _path(args.out, "oracle_summary.json")}
    write_events_csv(lg, files["events"], s_values)
    summary = {
        "mode": mode,
        "n_events": len(lg),
        "final_clock": lg.final.clock,
        "drift": drift,
        "containment_error": containment_error(lg),
    }
    io.write_json(summary, files["summary"])
    worst = max(drift.values(), default=0.0)
    print(f"{len(lg)} events, max relative drift = {io.fmt(worst)}")
    if worst > tol:
        raise NumericalDrift(f"conservation drift {worst:.3g} exceeds {tol:.3g}")
    return files


# sweep


def _axis(cfg: Config, key: str):
    """A grid axis: a list of values or ``{start, stop, num}``; None if absent."""
    if not cfg.has(key):
        return None
    node = cfg.data
    for part in key.split("."):
        node = node[part]
    if isinstance(node, dict):
        num = cfg.get(f"{key}.num", int)
        if num < 1:
            raise cfg.error(f"{key}.num", "must be at least 1")
        return np.linspace(cfg.get(f"{key}.start", float), cfg.get(f"{key}.stop", float), num)
    raw = cfg.get(key, list)
    if not raw or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
        raise cfg.error(key, "expected a nonempty list of numbers or {start, stop, num}")
    return np.array(raw, dtype=float)


SWEEP_COLUMNS = ["eta1", "eta2", "lambda", "F", "gamma_norm", "rational", "u_empty", "period"]


def sweep_cell(args) -> list:
    """One grid cell: ``(R, N, E, eta1, eta2, lam, s0, period_cap)`` to a CSV row."""
    R, N, E, eta1, eta2, lam, s0, cap = args
    p = PhysicalParams(R, eta1, eta2, Mode.DOUBLE_ROTOR)
    F = lam * E
    ints = Integrals(N, E, F)
    g = classify_gamma(p)
    if validate_params(p, ints):
        return [eta1, eta2, lam, F, g.gamma, g.kind == "rational", "", -1]
    c = build_circle(p, ints)
    U = compute_U(c, p, ints)
    n_cover = cover_bound(U, c.gamma_norm)
    period = detect_period(BaseState(s0, Sheet.O), c, U, 4 * n_cover + 2 if n_cover else cap)
    return [eta1, eta2, lam, F, c.gamma_norm, g.kind == "rational", U.empty,
            -1 if period is None else period]


def cmd_sweep(cfg: Config, args) -> dict:
    """Row-major grid over ``(eta1, eta2, lambda = F/E)``."""
    R = cfg.get("params.R", float)
    N = cfg.get("integrals.N", float, 0.0)
    E = cfg.get("integrals.E", float, 1.0)
    eta1 = _axis(cfg, "grid.eta1")
    if eta1 is None:
        raise cfg.error("grid.eta1", "required field is missing")
    eta2 = _axis(cfg, "grid.eta2")
    tied = eta2 is None
    lam = _axis(cfg, "grid.lambda")
    if lam is None:
        raise cfg.error("grid.lambda", "required field is missing")
    n2 = 1 if tied else len(eta2)
    cells = len(eta1) * n2 * len(lam)
    if cells > MAX_SWEEP_CELLS:
        raise cfg.error("grid", f"{cells} cells exceed the limit of {MAX_SWEEP_CELLS}")
    _check(cfg, validate_params(PhysicalParams(R, 1.0, 1.0)), "params")
    rng = SplitMix64(_seed(cfg, args))
    s0 = rng.uniform()
    cap = args.steps if args.steps is not None else cfg.get("period_search", int, SWEEP_PERIOD_CAP)
    jobs = []
    for a in eta1:
        for b in ([a] if tied else eta2):
            for l in lam:
                jobs.append((R, N, E, float(a), float(b), float(l), s0, cap))
    workers = cfg.get("workers", int, 1)
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(sweep_cell, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    else:
        rows = [sweep_cell(j) for j in jobs]
    path = _path(args.out, "sweep.csv")
    io.write_csv(path, SWEEP_COLUMNS, rows)
    print(f"{cells} cells written to {path}")
    return {"sweep": path}


# ---------------------------------------------------------------------------
# entry point

VERBS = {
    "base": cmd_base,
    "single": cmd_single,
    "two": cmd_two,
    "oracle": cmd_oracle,
    "classify": cmd_classify,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rotor-annulus", description=__doc__.split("\n")[0])
    ap.add_argument("verb", choices=sorted(VERBS))
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default=".", help="output directory (created if missing)")
    ap.add_argument("--seed", type=_u64, default=None, help="overrides the config seed")
    ap.add_argument("--steps", type=int, default=None, help="overrides the step/event count")
    ap.add_argument("--oracle-check", action="store_true",
                    help="cross-check the reduced map against the Cartesian simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, NumericalDrift):
        return EXIT_DRIFT
    if isinstance(exc, (PreconditionUnmet, NonAlternating, ConventionViolated, Unreachable)):
        return EXIT_PRECONDITION
    return EXIT_CONFIG


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = Config.load(args.config)
        os.makedirs(args.out, exist_ok=True)
        VERBS[args.verb](cfg, args)
    except RotorAnnulusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
