import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from qrsample.errors import InfeasibleError, ProbabilityRangeError, ValidationError
from qrsample.waterfill import (
    compute_bounds,
    dual_witness,
    epsilon_of_gamma,
    p_of_gamma,
    slack_matrix,
    verify_duality,
    waterfill,
)

PI = np.array([math.sqrt(0.8), math.sqrt(0.2)])
FLAT = np.array([1, 1]) / math.sqrt(2)


def unit(v):
    v = np.abs(np.asarray(v, dtype=float))
    return v / np.linalg.norm(v)


def test_bounds_point_mass():
    b = compute_bounds([1.0, 0.0], FLAT)
    assert b.p_min == pytest.approx(0.5) and b.p_max == pytest.approx(0.5)
    assert b.gamma_min == pytest.approx(math.sqrt(2)) and b.gamma_max == pytest.approx(math.sqrt(2))


def test_bounds_two_level():
    b = compute_bounds(PI, FLAT)
    assert b.p_min == pytest.approx((math.sqrt(0.4) + math.sqrt(0.1)) ** 2, abs=1e-15)
    assert b.p_max == pytest.approx(1.0)


def test_epsilon_componentwise_min():
    assert np.allclose(epsilon_of_gamma(PI, FLAT, 0.8), [0.8 / math.sqrt(2), math.sqrt(0.2)])
    b = compute_bounds(PI, FLAT)
    assert np.allclose(epsilon_of_gamma(PI, FLAT, b.gamma_max), PI)


def test_p_of_gamma_endpoints_and_scalar_check():
    b = compute_bounds(PI, FLAT)
    assert p_of_gamma(PI, FLAT, b.gamma_min / 2) == pytest.approx(b.p_max)
    assert p_of_gamma(PI, FLAT, b.gamma_max * 3) == pytest.approx(b.p_min)
    # gamma = 1: eps = (1/sqrt2, sqrt0.2)
    e1, e2 = 1 / math.sqrt(2), math.sqrt(0.2)
    expect = ((e1 + e2) / math.sqrt(2)) ** 2 / (e1 * e1 + e2 * e2)
    assert p_of_gamma(PI, FLAT, 1.0) == pytest.approx(expect, abs=1e-15)


def test_p_of_gamma_rejects_zero():
    with pytest.raises(ValidationError):
        p_of_gamma(PI, FLAT, 0.0)


def test_solution_at_endpoints():
    b = compute_bounds(PI, FLAT)
    top = waterfill(PI, FLAT, b.p_max)
    assert np.allclose(top.epsilon, b.gamma_min * FLAT)
    bottom = waterfill(PI, FLAT, b.p_min)
    assert np.allclose(bottom.epsilon, PI)
    assert 1 / bottom.norm == pytest.approx(1.0)


def test_out_of_range_errors_carry_endpoints():
    b = compute_bounds([1.0, 0.0], [0.6, 0.8])
    with pytest.raises(InfeasibleError) as info:
        waterfill([1.0, 0.0], [0.6, 0.8], 0.5)
    assert info.value.p_max == pytest.approx(b.p_max)
    with pytest.raises(ProbabilityRangeError):
        waterfill(PI, FLAT, 0.5)


def test_midpoint_matches_grid_scan():
    b = compute_bounds(PI, FLAT)
    p = 0.5 * (b.p_min + b.p_max)
    sol = waterfill(PI, FLAT, p)
    gammas = np.linspace(b.gamma_min, b.gamma_max, 1_000_000)
    eps = np.minimum(PI[None, :], gammas[:, None] * FLAT[None, :])
    ps = (eps @ FLAT) ** 2 / np.sum(eps ** 2, axis=1)
    best = gammas[np.argmin(np.abs(ps - p))]
    assert sol.gamma_bar == pytest.approx(best, abs=2 * (b.gamma_max - b.gamma_min) / 1e6)
    assert (sol.epsilon @ FLAT) ** 2 / sol.objective == pytest.approx(p, abs=1e-12)


def test_three_dimensional_slack_is_psd():
    rng = np.random.default_rng(3)
    pi, sigma = unit(rng.normal(size=3)), unit(rng.normal(size=3))
    b = compute_bounds(pi, sigma)
    p = 0.3 * b.p_min + 0.7 * b.p_max
    w = dual_witness(pi, sigma, p)
    assert np.linalg.eigvalsh(slack_matrix(sigma, p, w)).min() >= -1e-10
    assert np.sum(w.lam * pi ** 2) == pytest.approx(waterfill(pi, sigma, p).objective, abs=1e-8)


def test_zero_sigma_component_below_threshold():
    pi = unit([1.0, 1.0, 1.0])
    sigma = unit([1.0, 2.0, 0.0])
    b = compute_bounds(pi, sigma)
    p = b.p_min + 0.1 * (b.p_max - b.p_min)
    sol = waterfill(pi, sigma, p)
    assert (sigma @ sol.epsilon) ** 2 / sol.objective == pytest.approx(p, abs=1e-10)
    assert verify_duality(pi, sigma, p).passed


def test_certificate_at_p_max_is_primal_only():
    c = verify_duality(PI, FLAT, 1.0)
    assert c.passed and c.objective_dual is None


entry = st.one_of(st.just(0.0), st.floats(1e-3, 1.0))
amplitudes = st.lists(entry, min_size=1, max_size=16)


@settings(max_examples=200, deadline=None)
# mu grows like 1/(p_max - p), so the slack entries reach ~1e7 in the last
# sliver of the range and the eigensolver's own error passes 1e-10 there
@given(amplitudes, st.data(), st.floats(0.0, 1.0 - 1e-4))
def test_certificate_holds(raw_pi, data, frac):
    n = len(raw_pi)
    raw_sigma = data.draw(st.lists(entry, min_size=n, max_size=n))
    assume(max(raw_pi) > 0 and max(raw_sigma) > 0)
    pi, sigma = unit(raw_pi), unit(raw_sigma)
    b = compute_bounds(pi, sigma)
    assume(b.p_min > 1e-6)
    p = b.p_min + frac * (b.p_max - b.p_min)
    cert = verify_duality(pi, sigma, p)
    assert cert.passed, cert.violations()
    sol = waterfill(pi, sigma, p)
    assert sigma @ sol.epsilon / sol.norm == pytest.approx(math.sqrt(sol.p), abs=1e-9)
    assert np.all(sol.epsilon <= pi + 1e-15)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**31 - 1))
def test_p_of_gamma_is_monotone(n, seed):
    rng = np.random.default_rng(seed)
    pi, sigma = unit(rng.random(n) + 0.01), unit(rng.random(n) + 0.01)
    b = compute_bounds(pi, sigma)
    gs = np.linspace(b.gamma_min, b.gamma_max, 50)
    ps = [p_of_gamma(pi, sigma, g) for g in gs]
    assert np.all(np.diff(ps) <= 1e-12)
