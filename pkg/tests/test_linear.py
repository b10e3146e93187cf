import math

import numpy as np
import pytest

from qrsample.errors import ValidationError
from qrsample.linear import (
    QLEInstance,
    expected_query_scale,
    phase_estimation_unitary,
    ratio_vector,
    solve_qle,
    truncated_weights,
)
from qrsample.statevector import haar_unitary


def small():
    return QLEInstance.diagonal([1.0, 0.5], np.array([1, 1]) / math.sqrt(2), 2.0)


def test_phase_estimation_labels_eigenvectors():
    inst = small()
    u = phase_estimation_unitary(inst)
    n = inst.grid.size
    for j in range(2):
        src = np.kron(np.eye(2)[j], np.eye(n)[0])
        dst = np.kron(np.eye(2)[j], np.eye(n)[j])
        assert np.allclose(u @ src, dst)
    assert np.allclose(inst.grid[:2], [1.0, 0.5])


def test_ratio_peaks_at_one():
    inst = QLEInstance.diagonal([1.0, 0.5, 0.3], np.ones(3) / math.sqrt(3), 4.0)
    tau = ratio_vector(inst)
    assert tau.max() == pytest.approx(1.0)
    assert inst.grid[-1] == pytest.approx(0.25)


def test_weights_two_level():
    w = truncated_weights(small(), 2.0)
    assert np.allclose(w.w, [1 / math.sqrt(2), math.sqrt(2)])
    assert np.allclose(w.w / np.linalg.norm(w.w), [1 / math.sqrt(5), 2 / math.sqrt(5)])
    assert w.p == pytest.approx(1.0)


def test_truncated_weights_by_formula():
    b = np.array([0.6, 0.8])
    inst = QLEInstance.diagonal([1.0, 0.25], b, 4.0)
    w = truncated_weights(inst, 2.0)
    assert np.allclose(w.w_tilde, b * np.minimum(2.0, 1 / np.array([1.0, 0.25])))
    assert w.overlap == pytest.approx(w.w @ w.w_tilde / (np.linalg.norm(w.w) * np.linalg.norm(w.w_tilde)))
    assert w.p == pytest.approx(w.overlap ** 2)


def test_solution_fidelity_one():
    r = solve_qle(small(), 2.0, np.random.default_rng(0))
    assert r.p_measured == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(np.abs(r.output.amps), [1 / math.sqrt(5), 2 / math.sqrt(5)], atol=1e-9)
    # label, three per reflection, unlabel
    assert r.queries == 3 * r.reflections + 2


def test_rotated_basis_matches_truncated_solution():
    rng = np.random.default_rng(4)
    lam = np.array([1.0, 0.6, 0.3, 0.125])
    v = haar_unitary(4, rng)
    b = np.abs(rng.normal(size=4))
    inst = QLEInstance(lam, v, b / np.linalg.norm(b), 8.0)
    for kt in (1.0, 3.0, 8.0):
        res = solve_qle(inst, kt, rng)
        assert res.fidelity_truncated == pytest.approx(1.0, abs=1e-9)
        assert res.p_measured == pytest.approx(truncated_weights(inst, kt).p, abs=1e-9)


def test_query_scale_grows_with_cutoff():
    inst = QLEInstance.diagonal([1.0, 0.5, 0.25], np.array([3, 1, 1]) / math.sqrt(11), 4.0)
    scales = [expected_query_scale(inst, k) for k in (1.0, 2.0, 4.0)]
    assert scales == sorted(scales)


@pytest.mark.parametrize("bad", [
    dict(eigenvalues=[1.0, 0.1], kappa=2.0),
    dict(eigenvalues=[1.0, 1.0], kappa=2.0),
    dict(eigenvalues=[1.0, 0.5], kappa=0.5),
])
def test_invalid_instances(bad):
    with pytest.raises(ValidationError):
        QLEInstance.diagonal(bad["eigenvalues"], np.array([1, 1]) / math.sqrt(2), bad["kappa"])


def test_cutoff_outside_range():
    with pytest.raises(ValidationError):
        truncated_weights(small(), 3.0)
