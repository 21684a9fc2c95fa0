"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--events N] [--steps N] [--repeat K]
"""
import argparse
import time

import numpy as np

from rotor_annulus._backend import load
from rotor_annulus.circle import BaseState, Sheet, build_circle, compute_U
from rotor_annulus.core import Integrals, PhysicalParams
from rotor_annulus.oracle import OracleParams, double_rotor_state, run
from rotor_annulus.skew import SkewState, base_orbit, skew_orbit


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, default=20_000)
    ap.add_argument("--steps", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    p = PhysicalParams(0.5, 1.0, 2.0)
    ints = Integrals(1.8, 1.0, 8.0)
    c = build_circle(p, ints)
    U = compute_U(c, p, ints)
    st = double_rotor_state(0.4, 0.1, c, p, ints.F)
    params = OracleParams.from_physical(p)

    py = load("python")
    try:
        cy = load("cython")
    except ImportError:
        print("compiled kernels not built; nothing to compare")
        return 1

    cases = {
        f"run_events ({args.events} events)":
            lambda k: run(st, params, n_events=args.events, kernels=k).final.pos,
        f"skew_orbit ({args.steps} steps)":
            lambda k: skew_orbit(SkewState(0.4, 0.1), c, U, p, ints, args.steps, kernels=k).lifted_phi,
        f"base_orbit ({args.steps} steps)":
            lambda k: base_orbit(BaseState(0.3, Sheet.O), c, U, args.steps, kernels=k)[0],
    }
    print(f"{'kernel':32s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, fn in cases.items():
        tp, a = best_of(lambda: fn(py), args.repeat)
        tc, b = best_of(lambda: fn(cy), args.repeat)
        diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
        print(f"{name:32s} {tp:10.4f} {tc:10.4f} {tp / tc:8.1f} {diff:10.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
