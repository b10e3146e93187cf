import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrsample.errors import InfeasibleError, PromiseError
from qrsample.hiddenshift import (
    BooleanFunction,
    ShiftOracle,
    bent_example,
    boosted_bhsp,
    check_round_state,
    check_shift,
    cut_spectrum,
    delta_function,
    influence,
    influences,
    min_influence,
    phi_state,
    prepare_psi_fhat,
    run_bhsp,
    shift_distribution,
    spectrum_pair,
    wht,
    wht_naive,
)
from qrsample.qrs import plan_exact
from qrsample.statevector import register_probabilities

AND = BooleanFunction(2, [0, 0, 0, 1])


def promise_function(n, rng):
    while True:
        f = BooleanFunction(n, rng.integers(0, 2, size=1 << n))
        if min_influence(f) > 0:
            return f


def test_and_spectrum_is_flat():
    assert np.allclose(wht(AND), [0.5, 0.5, 0.5, -0.5])


@pytest.mark.parametrize("n", range(0, 11))
def test_fast_transform_matches_naive(n):
    f = BooleanFunction(n, np.random.default_rng(n).integers(0, 2, size=1 << n))
    assert np.max(np.abs(wht(f) - wht_naive(f))) <= 1e-12


def test_hex_and_bits_agree():
    f = BooleanFunction.from_hex(2, "8")
    assert np.array_equal(f.truth_table, AND.truth_table)
    assert np.array_equal(BooleanFunction.from_bits(2, "0001").truth_table, AND.truth_table)


def test_fourier_state_of_and_with_shift_eleven():
    psi = prepare_psi_fhat(ShiftOracle(AND, 0b11))
    assert np.allclose(psi.amps, [0.5, -0.5, -0.5, -0.5])


@pytest.mark.parametrize("s", range(8))
def test_fourier_magnitudes_ignore_shift(s):
    f = BooleanFunction(3, [0, 1, 1, 0, 1, 0, 0, 0])
    psi = prepare_psi_fhat(ShiftOracle(f, s))
    assert np.allclose(np.abs(psi.amps), np.abs(f.spectrum))


def test_parity_influences():
    f = BooleanFunction.from_callable(2, lambda x: (x ^ (x >> 1)) & 1)
    assert influence(f, 0b01) == 1.0
    assert influence(f, 0b11) == 0.0
    with pytest.raises(PromiseError):
        run_bhsp(ShiftOracle(f, 1), f, 1.0, np.random.default_rng(0))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_fast_influences_match_definition(n, seed):
    f = BooleanFunction(n, np.random.default_rng(seed).integers(0, 2, size=1 << n))
    assert np.allclose(influences(f), [influence(f, v) for v in range(f.size)], atol=1e-12)


def test_inner_products_on_four_bits():
    rng = np.random.default_rng(4)
    for _ in range(40):
        f = BooleanFunction(4, rng.integers(0, 2, size=16))
        for s in range(16):
            for v in range(16):
                ip = np.vdot(phi_state(f, s).amps, phi_state(f, v).amps).real
                assert ip == pytest.approx(1 - 2 * influence(f, s ^ v), abs=1e-12)


def test_bent_single_query_recovery():
    f = bent_example(4)
    for s in range(16):
        res = run_bhsp(ShiftOracle(f, s), f, 1.0, np.random.default_rng(s))
        assert res.s_hat == s and res.queries == 1
        assert res.distribution[s] == pytest.approx(1.0, abs=1e-12)


def test_delta_function_queries_follow_spectrum():
    f = delta_function(4, 0)
    pi, sigma = spectrum_pair(f)
    plan = plan_exact(pi, sigma, 1.0)
    theta = math.asin(np.linalg.norm(plan.epsilon))
    assert plan.t_tilde == math.ceil(math.pi / (4 * theta) - 0.5 - 1e-12)
    res = run_bhsp(ShiftOracle(f, 9), f, 1.0, np.random.default_rng(0))
    assert res.queries == 2 * plan.t_tilde + 1
    assert res.s_hat == 9


def test_random_function_meets_requested_probability():
    rng = np.random.default_rng(6)
    f = promise_function(6, rng)
    s = 37
    dist = shift_distribution(f, s, 0.8)
    assert dist[s] >= 0.8 - 1e-9


def test_infeasible_target_probability():
    f = BooleanFunction(2, [0, 0, 0, 0])
    with pytest.raises((PromiseError, InfeasibleError)):
        run_bhsp(ShiftOracle(f, 1), f, 1.0, np.random.default_rng(0))


def test_check_never_rejects_true_shift():
    f = BooleanFunction(3, [0, 1, 1, 1, 0, 0, 1, 0])
    rng = np.random.default_rng(1)
    for s in range(8):
        assert check_shift(ShiftOracle(f, s), f, s, 32, rng).accept


def test_wrong_candidate_rejection_probability():
    f = bent_example(4)
    s, v = 5, 6
    assert influence(f, s ^ v) == 0.5
    state = check_round_state(ShiftOracle(f, s), f, v)
    survive = register_probabilities(state, 0)[0]
    assert survive == pytest.approx(0.5, abs=1e-12)
    assert 1 - survive ** 20 == pytest.approx(1 - 2.0 ** -20, abs=1e-15)


def test_cut_spectrum_l1_relation():
    f = promise_function(6, np.random.default_rng(8))
    eps, p, p_l1 = cut_spectrum(f, 0.5)
    pi, sigma = spectrum_pair(f)
    direct = (sigma @ eps) ** 2 / (eps @ eps)
    assert p == pytest.approx(direct, abs=1e-12)
    assert p_l1 == pytest.approx(direct, abs=1e-12)


def test_boosting_failure_rate():
    # complement of majority-of-three: every influence is 1/2 and the cut keeps p = 1/2,
    # so half the candidates are wrong and the check has work to do
    f = BooleanFunction.from_hex(3, "17")
    eps, p, _ = cut_spectrum(f, 0.5)
    assert p == pytest.approx(0.5)
    delta = 0.05
    runs = 10_000
    rng = np.random.default_rng(10)
    wrong = 0
    for k in range(runs):
        s = k % f.size
        wrong += boosted_bhsp(ShiftOracle(f, s), f, 0.5, delta, rng).s_hat != s
    assert wrong / runs <= delta + 3 * math.sqrt(delta * (1 - delta) / runs)
