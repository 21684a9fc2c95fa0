import os
import subprocess
import sys

import numpy as np
import pytest

from rotor_annulus import BACKEND, _pykernels
from rotor_annulus._backend import load
from rotor_annulus.circle import BaseState, Sheet, build_circle, compute_U
from rotor_annulus.core import Integrals, Mode, PhysicalParams
from rotor_annulus.oracle import OracleParams, run
from rotor_annulus.skew import SkewState, base_orbit, skew_orbit
from rotor_annulus.two import TwoParticleState, build_base, cartesian_initial

try:
    compiled = load("cython")
except ImportError:
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


def test_backend_name():
    assert BACKEND in ("cython", "python")


def test_pure_env_selects_python():
    env = dict(os.environ, ROTOR_ANNULUS_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import rotor_annulus; print(rotor_annulus.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
def test_oracle_parity():
    p = PhysicalParams(0.5, 1.7, mode=Mode.TWO_PARTICLE)
    base = build_base(p, Integrals(0.4, 1.0, vn_fixed=0.8, un_fixed=1.3))
    st, _ = cartesian_initial(TwoParticleState(0.3, 0.5), base)
    a = run(st, OracleParams.from_physical(p), n_events=5000, kernels=_pykernels)
    b = run(st, OracleParams.from_physical(p), n_events=5000, kernels=compiled)
    for name in ("time", "particle", "wall", "pos", "vel_post", "omega_post"):
        assert np.array_equal(getattr(a, name), getattr(b, name)), name
    assert np.array_equal(a.final.pos, b.final.pos)


@needs_compiled
def test_orbit_parity(double_partial_u):
    p, ints = double_partial_u
    c = build_circle(p, ints)
    U = compute_U(c, p, ints)
    a = skew_orbit(SkewState(0.3, 0.1), c, U, p, ints, 5000, kernels=_pykernels)
    b = skew_orbit(SkewState(0.3, 0.1), c, U, p, ints, 5000, kernels=compiled)
    for name in ("s", "phi", "winding", "clock", "in_u"):
        assert np.array_equal(getattr(a, name), getattr(b, name)), name
    sa = base_orbit(BaseState(0.3, Sheet.O), c, U, 5000, kernels=_pykernels)
    sb = base_orbit(BaseState(0.3, Sheet.O), c, U, 5000, kernels=compiled)
    assert np.array_equal(sa[0], sb[0]) and np.array_equal(sa[1], sb[1])


@needs_compiled
def test_next_hit_parity():
    rng = np.random.default_rng(9)
    for px, py, vx, vy in rng.uniform(-0.7, 0.7, (2000, 4)):
        assert _pykernels.next_hit(px, py, vx, vy, 0.5) == compiled.next_hit(px, py, vx, vy, 0.5)
