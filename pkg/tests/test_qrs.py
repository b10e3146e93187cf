import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrsample.errors import InfeasibleError
from qrsample.qrs import (
    CoinRotation,
    amplification_constants,
    build_state_Psi_eps,
    plan_exact,
    reflection_from_preparation,
    rotation_R,
    run_AQRS,
    subroutine_SQRS,
    target_state,
)
from qrsample.statevector import (
    QuantumState,
    make_preparation_oracle,
    overlap,
    random_hidden_states,
    register_probabilities,
)
from qrsample.waterfill import compute_bounds


def random_instance(rng, n, d):
    pi = np.abs(rng.normal(size=n))
    sigma = np.abs(rng.normal(size=n))
    return pi / np.linalg.norm(pi), sigma / np.linalg.norm(sigma), random_hidden_states(n, d, rng)


def test_rotation_block():
    rot = rotation_R([0.8, 0.6], [0.48, 0.0])
    assert np.allclose(rot.block(0), [[0.8, -0.6], [0.6, 0.8]])
    assert np.allclose(rot.block(1), np.eye(2))


def test_rotation_inverse_undoes_rotation():
    rot = CoinRotation([0.3, 0.9])
    s = QuantumState((2, 2), np.array([0.6, 0.0, 0.0, 0.8]))
    assert np.allclose(rot.apply(rot.apply(s), inverse=True).amps, s.amps)


def test_coin_one_branch_matches_epsilon():
    rng = np.random.default_rng(11)
    pi, sigma, hidden = random_instance(rng, 5, 3)
    eps = 0.7 * np.minimum(pi, sigma)
    oracle = make_preparation_oracle(pi, hidden, seed=1)
    state = build_state_Psi_eps(oracle, pi, eps)
    assert oracle.counter.count == 1
    assert register_probabilities(state, 2)[1] == pytest.approx(eps @ eps, abs=1e-12)
    accepted = state.tensor[..., 1].reshape(-1) / np.linalg.norm(eps)
    want = target_state(sigma, hidden).tensor[..., 1].reshape(-1)
    assert np.vdot(want, accepted).real == pytest.approx(sigma @ eps / np.linalg.norm(eps), abs=1e-12)


def test_reflection_costs_two_queries():
    rng = np.random.default_rng(2)
    pi, _, hidden = random_instance(rng, 3, 2)
    oracle = make_preparation_oracle(pi, hidden, seed=0)
    ref = reflection_from_preparation(oracle)
    s = oracle.apply(QuantumState.zero((2, 3)), (0, 1))
    out = ref.apply(s, (0, 1))
    assert oracle.counter.count == 3
    assert np.allclose(out.amps, -s.amps)


@pytest.mark.parametrize("t", range(6))
def test_rounds_rotate_by_twice_theta(t):
    rng = np.random.default_rng(5)
    pi, _, hidden = random_instance(rng, 4, 2)
    eps = 0.4 * pi
    theta = math.asin(np.linalg.norm(eps))
    oracle = make_preparation_oracle(pi, hidden, seed=5)
    state = build_state_Psi_eps(oracle, pi, eps)
    state = subroutine_SQRS(state, reflection_from_preparation(oracle), pi, eps, t=t)
    assert register_probabilities(state, 2)[1] == pytest.approx(math.sin((2 * t + 1) * theta) ** 2, abs=1e-10)


def test_half_norm_reaches_certainty_in_one_round():
    pi = np.array([1.0])
    oracle = make_preparation_oracle(pi, np.array([[1.0]]), seed=0)
    state = build_state_Psi_eps(oracle, pi, [0.5])
    state = subroutine_SQRS(state, reflection_from_preparation(oracle), pi, [0.5], t=1)
    assert register_probabilities(state, 2)[1] == pytest.approx(1.0, abs=1e-12)


def test_constants_half():
    theta, t, theta_t, r = amplification_constants(0.5)
    assert theta == pytest.approx(math.pi / 6)
    assert t == 1 and theta_t == pytest.approx(math.pi / 6) and r == pytest.approx(1.0)


def test_constants_point_three():
    theta, t, theta_t, r = amplification_constants(0.3)
    assert t == math.ceil(math.pi / (4 * math.asin(0.3)) - 0.5) == 3
    assert r == pytest.approx(math.sin(math.pi / 14) / 0.3)
    assert 0.5 <= r <= 1


def test_plan_below_p_min_uses_one_query():
    pi = np.array([math.sqrt(0.8), math.sqrt(0.2)])
    sigma = np.array([1, 1]) / math.sqrt(2)
    plan = plan_exact(pi, sigma, 0.1)
    assert plan.queries == 1
    assert plan.p == pytest.approx(compute_bounds(pi, sigma).p_min)


def test_plan_above_p_max_is_infeasible():
    with pytest.raises(InfeasibleError):
        plan_exact([1.0, 0.0], [0.6, 0.8], 0.9)


def test_seeded_run_is_exact():
    rng = np.random.default_rng(4)
    pi, sigma, hidden = random_instance(rng, 4, 2)
    b = compute_bounds(pi, sigma)
    p = 0.5 * (b.p_min + b.p_max)
    oracle = make_preparation_oracle(pi, hidden, seed=4)
    res = run_AQRS(oracle, pi, sigma, p, rng, target=target_state(sigma, hidden))
    assert res.accept_probability >= 1 - 1e-9
    assert res.success_overlap == pytest.approx(math.sqrt(p), abs=1e-9)
    assert res.queries == res.plan.queries


def test_output_state_overlap():
    rng = np.random.default_rng(8)
    pi, sigma, hidden = random_instance(rng, 3, 2)
    b = compute_bounds(pi, sigma)
    oracle = make_preparation_oracle(pi, hidden, seed=8)
    res = run_AQRS(oracle, pi, sigma, b.p_max, rng)
    want = target_state(sigma, hidden).tensor[..., 1].reshape(-1)
    got = QuantumState(res.output_state.dims, res.output_state.amps)
    assert abs(np.vdot(want, got.amps)) ** 2 == pytest.approx(b.p_max, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-3, 1.0))
def test_r_and_exact_quarter_turn(norm):
    _, t, theta_t, r = amplification_constants(norm)
    assert 0.5 <= r <= 1
    assert math.sin((2 * t + 1) * theta_t) == pytest.approx(1.0, abs=1e-12)


def test_overlap_helper_conjugates_first_argument():
    a = QuantumState((2,), [1j, 0])
    b = QuantumState((2,), [1, 0])
    assert overlap(a, b) == pytest.approx(-1j)
