import math

import numpy as np
import pytest

from monorare.engine import (
    EngineConfig,
    MRMState,
    diagonal_init,
    k0_min,
    make_rng,
    run,
    sample_nondominated,
)
from monorare.errors import InitFailed
from monorare.geometry import FrontierPair, Region, bounds, classify, insert
from monorare.problems import custom_problem, hydraulic_problem, toy_problem


class Linear:
    """g(x) = sum(x) - 1, with a call counter."""

    def __init__(self, d=2, shift=1.0):
        self.dimension = d
        self.shift = shift
        self.calls = 0

    def evaluate(self, x):
        self.calls += 1
        return float(np.sum(x)) - self.shift


def test_k0_min_examples():
    assert k0_min(0.05, 2) == 4
    assert k0_min(0.5, 1) == 2
    assert k0_min(0.01, 4) == 3
    with pytest.raises(ValueError):
        k0_min(0.0, 2)


def test_diagonal_init_linear_two_steps():
    cfg = EngineConfig(n_steps=1, p_guess=0.5, init_steps=2)
    res = diagonal_init(Linear(), cfg)
    assert res.calls == 2
    assert res.signatures == (1, 0)
    assert res.bounds.lower == 0.25
    assert res.bounds.upper == 0.9375


def test_diagonal_init_fails_without_sign_change():
    cfg = EngineConfig(n_steps=1, p_guess=0.5, init_steps=3, init_max_steps=6)
    with pytest.raises(InitFailed) as info:
        diagonal_init(Linear(shift=-1.0), cfg)
    assert info.value.lower == 0.0


def test_diagonal_init_toy_four_steps():
    prob = toy_problem(2, 0.05)
    res = diagonal_init(prob.fresh(), EngineConfig(n_steps=1, p_guess=0.05))
    assert res.calls == 4
    assert 0.0 < res.bounds.lower <= 0.05 <= res.bounds.upper < 1.0


def test_diagonal_init_continues_until_nontrivial():
    # p = 0.005 in d = 2: four bisection steps leave the lower bound at zero
    prob = toy_problem(2, 0.005)
    res = diagonal_init(prob.fresh(), EngineConfig(n_steps=1, p_guess=0.005))
    assert res.calls > 4
    assert res.bounds.lower > 0.0 and res.bounds.upper < 1.0


def test_sample_nondominated_empty_and_postcondition():
    rng = make_rng(0)
    x = sample_nondominated(FrontierPair.empty(3), rng)
    assert x.shape == (3,)
    pair = insert(insert(FrontierPair.empty(2), (0.4, 0.4), 1), (0.6, 0.6), 0)
    for _ in range(200):
        assert classify(pair, sample_nondominated(pair, rng)) is Region.NON_DOMINATED


def test_acceptance_rate_matches_undecided_volume():
    pair = insert(insert(FrontierPair.empty(2), (0.5, 0.3), 1), (0.6, 0.7), 0)
    b = bounds(pair)
    from monorare import _kernels

    rng = make_rng(1)
    draws = [_kernels.sample_nondominated(pair.failure, pair.safe, rng, 10**6)[1] for _ in range(10**4)]
    rate = 10**4 / sum(draws)
    q = b.width
    # ratio estimator of a geometric mean; 4 s.e. of the binomial proportion
    assert abs(rate - q) <= 4 * math.sqrt(q * (1 - q) / sum(draws)) + 0.01 * q


def test_step_contract():
    prob = toy_problem(2, 0.05).fresh()
    state = MRMState(prob, EngineConfig(n_steps=50, p_guess=0.05), make_rng(3))
    for _ in range(50):
        before = prob.calls
        rec = state.step()
        assert prob.calls == before + 1
        if rec.signature == 1:
            assert rec.post_lower > rec.pre_lower and rec.post_upper == rec.pre_upper
        else:
            assert rec.post_upper < rec.pre_upper and rec.post_lower == rec.pre_lower


def test_run_sandwich_determinism_and_accounting():
    prob = toy_problem(2, 0.05)
    cfg = EngineConfig(n_steps=500, p_guess=0.05)
    a = run(prob.fresh(), cfg, 42)
    b = run(prob.fresh(), cfg, 42)
    assert a == b
    assert a.final_bounds.lower <= 0.05 <= a.final_bounds.upper
    assert a.calls_total == a.init_calls + 500
    path = a.bounds_path()
    assert np.all(np.diff(path[:, 0]) >= 0) and np.all(np.diff(path[:, 1]) <= 0)
    assert np.all(np.diff(path[:, 1] - path[:, 0]) <= 0)
    prev = a.init_bounds
    for r in a.records:
        assert (r.pre_lower, r.pre_upper) == (prev.lower, prev.upper)
        assert r.pre_lower <= r.post_lower <= r.post_upper <= r.pre_upper
        assert r.pre_lower < r.pre_upper
        prev = type(prev)(r.post_lower, r.post_upper)


def test_streams_are_independent_of_order():
    prob = toy_problem(2, 0.05)
    cfg = EngineConfig(n_steps=20, p_guess=0.05)
    first = [run(prob.fresh(), cfg, 7, (i,)) for i in range(3)]
    again = [run(prob.fresh(), cfg, 7, (i,)) for i in (2, 1, 0)][::-1]
    assert first == again
    assert first[0] != first[1]


def test_replay_matches_final_frontiers():
    prob = toy_problem(3, 0.05)
    traj = run(prob.fresh(), EngineConfig(n_steps=100, p_guess=0.05), 5)
    b = bounds(traj.frontiers())
    assert b.lower == pytest.approx(traj.final_bounds.lower, abs=1e-12)
    assert b.upper == pytest.approx(traj.final_bounds.upper, abs=1e-12)


def test_mc_policy_run_in_four_dimensions():
    prob = hydraulic_problem("dim4")
    traj = run(prob.fresh(), EngineConfig(n_steps=100, p_guess=0.01), 2)
    path = traj.bounds_path()
    assert np.all(np.diff(path[:, 0]) >= 0) and np.all(np.diff(path[:, 1]) <= 0)
    assert traj.final_bounds.lower < traj.final_bounds.upper


def test_ties_count_as_failure():
    # uniform inputs, g = x1 + x2 - 1: the first diagonal probe hits g = 0
    prob = custom_problem([{"family": "uniform"}] * 2, "linear", threshold=1.0)
    res = diagonal_init(prob, EngineConfig(n_steps=1, p_guess=0.5, init_steps=1))
    assert res.signatures[0] == 1


def test_engine_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(n_steps=0, p_guess=0.1)
    with pytest.raises(ValueError):
        EngineConfig(n_steps=1, p_guess=1.0)
