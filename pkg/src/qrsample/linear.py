"""Linear-systems step as strong resampling.

Ideal phase estimation ``E_A`` tags each eigenvector ``|psi_j>`` of ``A`` with a
label for its eigenvalue. Resampling the labelled state ``sum_j b_j |psi_j>|lambda_j>``
with ratios ``tau_lambda = 1/(kappa lambda)`` and ``alpha = kappa/kappa_tilde``
yields ``sum_j w~_j |psi_j>|lambda_j>`` where ``w~_j = b_j / max(1/kappa_tilde, lambda_j)``;
undoing ``E_A`` leaves an approximation of ``A^{-1} b`` in the first register.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .qrs import RunResult
from .sqrs import Schedule, fidelity, run_ASQRS
from .statevector import (
    QuantumState,
    QueryCounter,
    ReflectionOracle,
    UnitaryOracle,
    register_probabilities,
)

ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class QLEInstance:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns are psi_j
    b: np.ndarray  # nonnegative amplitudes of |b> in the eigenbasis
    kappa: float

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        vec = np.asarray(self.eigenvectors, dtype=np.complex128)
        b = np.asarray(self.b, dtype=float)
        d = lam.size
        if vec.shape != (d, d) or b.shape != (d,):
            raise ValidationError("eigenvectors must be d x d and b must have d entries")
        if np.max(np.abs(vec.conj().T @ vec - np.eye(d))) > ORTHO_TOL:
            raise ValidationError("eigenvectors are not orthonormal")
        if self.kappa < 1:
            raise ValidationError("kappa must be at least 1")
        if np.any(lam < 1 / self.kappa - 1e-12) or np.any(lam > 1 + 1e-12):
            raise ValidationError("eigenvalues must lie in [1/kappa, 1]")
        if np.unique(lam).size != d:
            raise ValidationError("eigenvalues must be distinct")
        if np.any(b < 0) or abs(np.linalg.norm(b) - 1) > 1e-9:
            raise ValidationError("b must be a nonnegative unit vector")
        for name, v in (("eigenvalues", lam), ("eigenvectors", vec), ("b", b)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def diagonal(cls, eigenvalues, b, kappa: float | None = None) -> "QLEInstance":
        lam = np.asarray(eigenvalues, dtype=float)
        kappa = 1 / lam.min() if kappa is None else kappa
        return cls(lam, np.eye(lam.size), b, kappa)

    @property
    def d(self) -> int:
        return self.eigenvalues.size

    @property
    def grid(self) -> np.ndarray:
        """Eigenvalue labels: the spectrum, plus ``1/kappa`` when it is not an eigenvalue."""
        g = list(self.eigenvalues)
        if not np.any(np.isclose(self.eigenvalues, 1 / self.kappa, rtol=0, atol=1e-12)):
            g.append(1 / self.kappa)
        return np.array(g)

    def b_vector(self) -> np.ndarray:
        return self.eigenvectors @ self.b

    def solution_vector(self) -> np.ndarray:
        """Normalised ``A^{-1} b``."""
        x = self.eigenvectors @ (self.b / self.eigenvalues)
        return x / np.linalg.norm(x)


def phase_estimation_unitary(instance: QLEInstance) -> np.ndarray:
    """``sum_j |psi_j><psi_j| (x) Shift^j`` on ``[d, n_labels]``; maps ``|psi_j>|0>`` to ``|psi_j>|j>``."""
    d, n = instance.d, instance.grid.size
    shift = np.roll(np.eye(n), 1, axis=0)
    out = np.zeros((d * n, d * n), dtype=np.complex128)
    for j in range(d):
        psi = instance.eigenvectors[:, j]
        out += np.kron(np.outer(psi, psi.conj()), np.linalg.matrix_power(shift, j))
    return out


def ratio_vector(instance: QLEInstance) -> np.ndarray:
    """``tau_lambda = 1/(kappa lambda)`` over the label grid."""
    return 1.0 / (instance.kappa * instance.grid)


@dataclass(frozen=True)
class TruncatedWeights:
    w: np.ndarray
    w_tilde: np.ndarray
    overlap: float  # w . w~ / (|w| |w~|)
    p: float  # overlap ** 2, the success probability of the output state


def truncated_weights(instance: QLEInstance, kappa_tilde: float) -> TruncatedWeights:
    if not (1 <= kappa_tilde <= instance.kappa + 1e-12):
        raise ValidationError("kappa_tilde must lie in [1, kappa]")
    lam = instance.eigenvalues
    w = instance.b / lam
    w_tilde = instance.b / np.maximum(1 / kappa_tilde, lam)
    ov = float(w @ w_tilde / (np.linalg.norm(w) * np.linalg.norm(w_tilde)))
    return TruncatedWeights(w, w_tilde, ov, ov ** 2)


class ConjugatedReflection:
    """``E_A (I - 2|b,0><b,0|) E_A^dagger``: three oracle calls per use."""

    def __init__(self, pe: UnitaryOracle, ref_b: ReflectionOracle):
        self._pe = pe
        self._ref = ref_b
        self.counter = pe.counter

    def apply(self, state: QuantumState, registers=(0, 1), inverse: bool = False, control=None) -> QuantumState:
        r0, r1 = registers
        ctrl = ((r1, 0),) + tuple(control or ())
        state = self._pe.apply(state, (r0, r1), inverse=True)
        state = self._ref.apply(state, (r0,), control=ctrl)
        return self._pe.apply(state, (r0, r1))


@dataclass
class QLEResult:
    run: RunResult
    output: QuantumState  # first register after undoing phase estimation
    weights: TruncatedWeights
    p_measured: float  # |<x|output>|^2 with x the normalised A^{-1} b
    fidelity_truncated: float  # against the normalised sum_j w~_j psi_j
    queries: int  # every use of E_A, E_A^dagger and the |b> reflection
    reflections: int


def solve_qle(instance: QLEInstance, kappa_tilde: float, rng: np.random.Generator,
              schedule: Schedule = Schedule()) -> QLEResult:
    weights = truncated_weights(instance, kappa_tilde)
    d, n = instance.d, instance.grid.size
    counter = QueryCounter()
    pe = UnitaryOracle(phase_estimation_unitary(instance), (d, n), counter)
    b_state = QuantumState((d,), instance.b_vector())
    ref_b = ReflectionOracle(b_state, counter)
    reflection = ConjugatedReflection(pe, ref_b)

    state = pe.apply(b_state.kron(QuantumState.basis((n,), (0,))), (0, 1))
    run = run_ASQRS(state, reflection, ratio_vector(instance), instance.kappa / kappa_tilde, rng, schedule)
    accepted = run.output_state
    undone = pe.apply(accepted, (0, 1), inverse=True)
    label_probs = register_probabilities(undone, 1)
    if abs(label_probs[0] - 1) > 1e-10:
        raise NumericalError("label register did not return to |0>")
    output = QuantumState((d,), undone.tensor[:, 0])

    x = QuantumState((d,), instance.solution_vector())
    x_tilde = instance.eigenvectors @ weights.w_tilde
    x_tilde = QuantumState((d,), x_tilde / np.linalg.norm(x_tilde))
    queries = counter.count
    return QLEResult(run, output, weights, fidelity(x, output), fidelity(x_tilde, output),
                     queries, run.queries // 3)


def expected_query_scale(instance: QLEInstance, kappa_tilde: float) -> float:
    """``kappa_tilde / |w~|``, the predicted growth of the reflection count."""
    w = truncated_weights(instance, kappa_tilde)
    return kappa_tilde / float(np.linalg.norm(w.w_tilde))
