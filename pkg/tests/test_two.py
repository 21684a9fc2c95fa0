
import numpy as np
import pytest

from rotor_annulus.core import Integrals, Mode, PhysicalParams
from rotor_annulus.errors import OutOfRange, PreconditionUnmet, Unreachable
from rotor_annulus.rng import SplitMix64
from rotor_annulus.two import (
    Branch,
    TwoParticleState,
    WConstruction,
    build_base,
    check_w_bounds,
    construct_W,
    n_epsilon,
    oracle_check,
    persistence_experiment,
    return_time,
    run_sample,
    sample_initial_set,
    timing,
    two_step,
    unified_t,
)


@pytest.fixture(scope="module")
def W():
    return construct_W(0.01, 0.5, 1.0)


@pytest.fixture(scope="module")
def generic():
    p = PhysicalParams(0.5, 1.7, mode=Mode.TWO_PARTICLE)
    return build_base(p, Integrals(0.4, 1.0, vn_fixed=0.8, un_fixed=1.3))


def test_return_time():
    assert return_time(0.0, 1.0, 0.5) == pytest.approx(1.0)
    assert return_time(0.6, 1.4, 0.5) == pytest.approx(2 * return_time(1.2, 2.8, 0.5))
    with pytest.raises(Unreachable):
        return_time(0.3, 0.0, 0.5)


def test_timing_symmetric_point(generic):
    # u(s) = u(s2) at the fixed point of s -> -s - gamma
    s = (-generic.gamma_norm / 2) % 1.0
    assert timing(s, generic).lambda_hat == pytest.approx(0.5, abs=1e-12)


def test_timing_in_W(W):
    tm = timing(np.arange(1000) / 1000, W.base)
    assert np.all(np.abs(tm.lambda_hat - 0.5) < 0.01)
    assert np.all(np.abs(tm.t_hat - 0.5) < 0.01)


def test_t_hat_fractional_part(generic):
    # make tau1 just above tau2 + tau3 by choosing the v normal speed
    s = 0.3
    tm = timing(s, generic)
    v = generic.circle.point(s)[0]
    target = 1.0001 * (tm.tau2 + tm.tau3)
    lo, hi = 1e-3, 100.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if return_time(v, mid, 0.5) > target else (lo, mid)
    p = PhysicalParams(0.5, 1.7, mode=Mode.TWO_PARTICLE)
    base = build_base(p, Integrals(0.4, 1.0, vn_fixed=lo, un_fixed=1.3))
    assert timing(s, base).t_hat == pytest.approx(1e-4, abs=1e-6)


def test_branch_advances(generic):
    rng = np.random.default_rng(0)
    seen = set()
    for s, t in rng.uniform(size=(2000, 2)):
        st, br = two_step(TwoParticleState(s, t), generic)
        seen.add(br)
        want = (s + generic.gamma_norm) % 1.0 if br is Branch.ODD else (-s) % 1.0
        assert abs((st.s - want + 0.5) % 1.0 - 0.5) < 1e-12
    assert seen == {Branch.ODD, Branch.EVEN}


def test_unified_formula_literal_map(generic):
    rng = np.random.default_rng(1)
    worst = 0.0
    for s, t in rng.uniform(size=(10_000, 2)):
        st = TwoParticleState(s, t)
        nxt, _ = two_step(st, generic, exact=False)
        u = unified_t(st, generic, nxt.s)
        worst = max(worst, abs((u - nxt.t + 0.5) % 1.0 - 0.5))
    assert worst < 1e-9


def test_exact_map_elapsed_time(generic):
    # t' tau2(s') is the time since the last u bounce: t tau2 + t_hat P minus 0, tau2 or P
    rng = np.random.default_rng(2)
    for s, t in rng.uniform(size=(10_000, 2)):
        st = TwoParticleState(s, t)
        nxt, br = two_step(st, generic)
        tm = timing(s, generic)
        P = tm.tau2 + tm.tau3
        elapsed = t * tm.tau2 + tm.t_hat * P
        if br is Branch.ODD:
            elapsed -= tm.tau2
        elif elapsed >= P:
            elapsed -= P
        assert nxt.t * timing(nxt.s, generic).tau2 == pytest.approx(elapsed, abs=1e-12)


def test_n_epsilon():
    assert n_epsilon(0.01) == 21
    grid = [0.001, 0.002, 0.005, 0.01, 0.02, 0.03, 0.04, 0.05]
    vals = [n_epsilon(e) for e in grid]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    with pytest.raises(OutOfRange):
        n_epsilon(0.2)


def test_construct_W(W):
    assert W.K == 8.0
    assert all(b.ok for b in W.bounds)


def test_persistence_large_K():
    p = PhysicalParams(0.5, 1.0, mode=Mode.TWO_PARTICLE)
    base = build_base(p, Integrals(0.0, 1.0, vn_fixed=1000.005, un_fixed=999.995))
    Wk = WConstruction(1000.0, 1000.005, 999.995, 0.01, base, tuple(check_w_bounds(base, 0.01)))
    rng = SplitMix64(11)
    rep = persistence_experiment(0.01, Wk, sample_initial_set(0.01, 100, rng.uniform))
    assert rep.survival_rate == 1.0
    assert all(r.bounds_ok for r in rep.samples)


def test_precondition_unmet():
    p = PhysicalParams(0.5, 1.0, mode=Mode.TWO_PARTICLE)
    base = build_base(p, Integrals(0.0, 1.0, vn_fixed=1.0, un_fixed=0.5))
    bad = WConstruction(1.0, 1.0, 0.5, 0.5, base, ())
    with pytest.raises(PreconditionUnmet, match="bound"):
        persistence_experiment(0.01, bad, [(0.1, 0.5)])


def test_excluded_sample(W):
    r = run_sample(0.2, 0.95, W.base, 0.01, 21)
    assert r.excluded


def test_literal_map_also_persists(W):
    rep = persistence_experiment(0.01, W, [(k / 20, 0.5) for k in range(20)], exact=False)
    assert rep.survival_rate == 1.0


def test_oracle_generic(generic):
    oc = oracle_check(TwoParticleState(0.3, 0.5), generic, 300)
    assert oc.n_steps == 300 and oc.branches_match
    assert oc.max_ds < 1e-8 and oc.max_dt < 1e-8


def test_oracle_rejects_literal_map(generic):
    # the two-branch simplification drifts away from the physics
    oc = oracle_check(TwoParticleState(0.3, 0.5), generic, 300, exact=False)
    assert not (oc.branches_match and oc.max_dt < 1e-8)


def test_sampling_is_seeded():
    a = sample_initial_set(0.01, 10, SplitMix64(5).uniform)
    b = sample_initial_set(0.01, 10, SplitMix64(5).uniform)
    assert a == b
    assert all(abs(t - 0.5) < 0.01 for _, t in a)
