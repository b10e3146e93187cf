"""One quantum Metropolis move with every move accepted.

Registers are ``[l, psi, E_i, E_j]``: a gate index, the system, and two energy
label registers. A move spreads ``|psi_i>`` over ``C_l |psi_i>``, labels the
resulting eigencomponents with ``E_H``, then resamples the amplitude of each
``(E_i, E_j)`` pair by ``sqrt(min(1, exp(beta (E_i - E_j))))`` from this single
copy. For the resampler the first two registers are merged into the hidden-state
register and the two label registers into the index register.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .sqrs import Schedule, run_ASQRS
from .statevector import (
    QuantumState,
    QueryCounter,
    UnitaryOracle,
    apply_diagonal,
    apply_unitary,
    haar_unitary,
    measure_register,
    register_probabilities,
)


@dataclass(frozen=True)
class QMMInstance:
    energies: np.ndarray
    eigenvectors: np.ndarray  # columns psi_j
    gates: tuple  # unitaries C_l on the system
    beta: float

    def __post_init__(self):
        E = np.asarray(self.energies, dtype=float)
        vec = np.asarray(self.eigenvectors, dtype=np.complex128)
        d = E.size
        if vec.shape != (d, d):
            raise ValidationError("eigenvectors must be a d x d matrix")
        if np.max(np.abs(vec.conj().T @ vec - np.eye(d))) > 1e-12:
            raise ValidationError("eigenvectors are not orthonormal")
        if np.unique(E).size != d:
            raise ValidationError("energies must be nondegenerate")
        if self.beta < 0:
            raise ValidationError("beta must be nonnegative")
        gates = tuple(np.asarray(g, dtype=np.complex128) for g in self.gates)
        if not gates:
            raise ValidationError("gate set is empty")
        for g in gates:
            if g.shape != (d, d) or np.max(np.abs(g.conj().T @ g - np.eye(d))) > 1e-12:
                raise ValidationError("every gate must be a d x d unitary")
        object.__setattr__(self, "energies", E)
        object.__setattr__(self, "eigenvectors", vec)
        object.__setattr__(self, "gates", gates)

    @classmethod
    def random(cls, energies, beta: float, seed: int, n_gates: int = 2, basis: bool = True) -> "QMMInstance":
        """Seeded instance with Haar-random gates (and eigenbasis unless ``basis`` is False)."""
        rng = np.random.default_rng(seed)
        d = len(energies)
        vec = haar_unitary(d, rng) if basis else np.eye(d)
        gates = tuple(haar_unitary(d, rng) for _ in range(n_gates))
        return cls(np.asarray(energies, dtype=float), vec, gates, beta)

    @property
    def d(self) -> int:
        return self.energies.size

    @property
    def n_gates(self) -> int:
        return len(self.gates)

    @property
    def hamiltonian(self) -> np.ndarray:
        v = self.eigenvectors
        return v @ np.diag(self.energies) @ v.conj().T


def acceptance(instance: QMMInstance) -> np.ndarray:
    """``f[i, j] = min(1, exp(beta (E_i - E_j)))``."""
    E = instance.energies
    with np.errstate(over="ignore"):
        return np.minimum(1.0, np.exp(instance.beta * (E[:, None] - E[None, :])))


def gate_amplitudes(instance: QMMInstance, i: int) -> np.ndarray:
    """``c[j, l] = <psi_j| C_l |psi_i>``."""
    v = instance.eigenvectors
    return np.stack([v.conj().T @ g @ v[:, i] for g in instance.gates], axis=1)


@dataclass(frozen=True)
class MoveWeights:
    w: np.ndarray  # w[j, l]
    norm: float
    target: np.ndarray  # normalised amplitudes over [l, psi] (system in the computational basis)
    outcome_probabilities: np.ndarray


def move_weights(instance: QMMInstance, i: int) -> MoveWeights:
    if not (0 <= i < instance.d):
        raise ValidationError(f"start index {i} out of range")
    f = acceptance(instance)[i]
    c = gate_amplitudes(instance, i)
    w = np.sqrt(f / instance.n_gates)[:, None] * c
    norm = float(np.linalg.norm(w))
    # sum_{j,l} w_jl |l>|psi_j>
    target = np.einsum("jl,aj->la", w, instance.eigenvectors).reshape(-1) / norm
    probs = np.sum(np.abs(w) ** 2, axis=1) / norm ** 2
    return MoveWeights(w, norm, target, probs)


def transition_matrix(instance: QMMInstance) -> np.ndarray:
    return np.stack([move_weights(instance, i).outcome_probabilities for i in range(instance.d)])


def ratio_vector(instance: QMMInstance) -> np.ndarray:
    """``tau`` over label pairs ``(E, E')``, flattened row-major."""
    return np.sqrt(acceptance(instance)).reshape(-1)


def source_amplitudes(instance: QMMInstance, i: int) -> np.ndarray:
    """``pi`` over label pairs: nonzero only on the row ``E = E_i``."""
    c = gate_amplitudes(instance, i)
    pi = np.zeros((instance.d, instance.d))
    pi[i] = np.sqrt(np.sum(np.abs(c) ** 2, axis=1) / instance.n_gates)
    return pi.reshape(-1)


def move_target_state(instance: QMMInstance, i: int) -> QuantumState:
    """Target of the move on ``[l, psi, E_i, E_j]``."""
    mw = move_weights(instance, i)
    C, d = instance.n_gates, instance.d
    t = np.zeros((C, d, d, d), dtype=np.complex128)
    for j in range(d):
        for l in range(C):
            t[l, :, i, j] = mw.w[j, l] * instance.eigenvectors[:, j]
    return QuantumState((C, d, d, d), t.reshape(-1) / mw.norm)


def _label_shift_oracle(instance: QMMInstance, counter: QueryCounter) -> UnitaryOracle:
    d = instance.d
    shift = np.roll(np.eye(d), 1, axis=0)
    m = np.zeros((d * d, d * d), dtype=np.complex128)
    for j in range(d):
        psi = instance.eigenvectors[:, j]
        m += np.kron(np.outer(psi, psi.conj()), np.linalg.matrix_power(shift, j))
    return UnitaryOracle(m, (d, d), counter)


def _move_unitary(instance: QMMInstance) -> np.ndarray:
    """``(sum_l |l><l| (x) C_l)(F (x) I)`` on ``[l, psi]``; free of queries."""
    C, d = instance.n_gates, instance.d
    F = np.fft.fft(np.eye(C)) / math.sqrt(C)
    ctrl = np.zeros((C * d, C * d), dtype=np.complex128)
    for l, g in enumerate(instance.gates):
        ctrl[l * d:(l + 1) * d, l * d:(l + 1) * d] = g
    return ctrl @ np.kron(F, np.eye(d))


class InitialStateReflection:
    """Reflection through the labelled move state, acting on the resampler layout.

    Undo the labelling and the gate spread, re-label the system into the
    free ``E_j`` register to test whether it is ``|psi_i>``, flip the phase of
    ``|l=0>|E_i>|E_i>``, then undo the test and redo the move. Four calls to
    ``E_H`` or its inverse per use.
    """

    def __init__(self, instance: QMMInstance, i: int, e_h: UnitaryOracle):
        self._i = i
        self._eh = e_h
        self._w = _move_unitary(instance)
        self._C, self._d = instance.n_gates, instance.d
        self.counter = e_h.counter

    def apply(self, state: QuantumState, registers=(0, 1), inverse: bool = False, control=None) -> QuantumState:
        if tuple(registers) != (0, 1) or len(state.dims) != 3:
            raise ValidationError("reflection acts on the [l*psi, E_i*E_j, coin] layout")
        C, d, i = self._C, self._d, self._i
        s = state.regroup((C, d, d, d, 2))
        s = self._eh.apply(s, (1, 3), inverse=True)
        s = apply_unitary(s, self._w.conj().T, (0, 1))
        s = self._eh.apply(s, (1, 3))
        phases = np.ones(C * d * d)
        phases[np.ravel_multi_index((0, i, i), (C, d, d))] = -1.0
        ctrl = [(4, v) for r, v in (control or ()) if r == 2]
        s = apply_diagonal(s, phases, (0, 2, 3), ctrl)
        s = self._eh.apply(s, (1, 3), inverse=True)
        s = apply_unitary(s, self._w, (0, 1))
        s = self._eh.apply(s, (1, 3))
        return s.regroup(state.dims)


def reflect_through_initial(instance: QMMInstance, i: int, counter: QueryCounter | None = None) -> InitialStateReflection:
    return InitialStateReflection(instance, i, _label_shift_oracle(instance, counter or QueryCounter()))


def prepare_move_state(instance: QMMInstance, i: int, e_h: UnitaryOracle,
                       psi: np.ndarray | None = None) -> QuantumState:
    """Label ``|psi_i>`` (one query), spread over the gates, label again (one query)."""
    C, d = instance.n_gates, instance.d
    psi = instance.eigenvectors[:, i] if psi is None else psi
    s = QuantumState((C, d, d, d), np.kron(np.kron(np.eye(C)[0], psi), np.kron(np.eye(d)[0], np.eye(d)[0])))
    s = e_h.apply(s, (1, 2))
    if abs(register_probabilities(s, 2)[i] - 1) > 1e-10:
        raise ValidationError("start state is not the eigenvector with label i")
    s = apply_unitary(s, _move_unitary(instance), (0, 1))
    return e_h.apply(s, (1, 3))


@dataclass
class MoveResult:
    j: int
    post_state: QuantumState  # [l, psi, E_i, E_j] after uncomputing E_j
    queries: int
    pre_measurement_state: QuantumState  # resampled state on [l, psi, E_i, E_j]
    outcome_probabilities: np.ndarray
    reflections: int
    levels: list = field(default_factory=list)


def metropolis_move(instance: QMMInstance, i: int, rng: np.random.Generator,
                    schedule: Schedule = Schedule()) -> MoveResult:
    C, d = instance.n_gates, instance.d
    counter = QueryCounter()
    e_h = _label_shift_oracle(instance, counter)
    state = prepare_move_state(instance, i, e_h)
    reflection = InitialStateReflection(instance, i, e_h)
    run = run_ASQRS(state.regroup((C * d, d * d)), reflection, ratio_vector(instance), 1.0, rng, schedule)
    pre = run.output_state.regroup((C, d, d, d))
    probs = register_probabilities(pre, 3)
    j, post, _ = measure_register(pre, 3, rng)
    post = e_h.apply(post, (1, 3), inverse=True)
    return MoveResult(j, post, counter.count, pre, probs, run.queries // 4, run.levels)


def run_chain(instance: QMMInstance, start: int, steps: int, rng: np.random.Generator) -> tuple[list, Counter]:
    """Apply ``steps`` moves from eigenstate ``start``; returns the path and a visit histogram."""
    if steps < 0:
        raise ValidationError("steps must be nonnegative")
    path = [start]
    i = start
    for _ in range(steps):
        i = metropolis_move(instance, i, rng).j
        path.append(i)
    return path, Counter(path)


def phase_aligned_distance(a: QuantumState, b: QuantumState) -> float:
    """``min_phi |a - e^{i phi} b|``."""
    ov = np.vdot(b.amps, a.amps)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.linalg.norm(a.amps - phase * b.amps))
