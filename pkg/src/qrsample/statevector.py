"""Dense statevector kernel with labelled registers and query-counted oracles.

States are immutable: every operation returns a new :class:`QuantumState`.
Register ``0`` is the most significant axis of the amplitude array, so the
amplitude of ``|a>|k>|c>`` on dims ``[d, n, 2]`` sits at ``(a * n + k) * 2 + c``.

Oracles hide their defining data behind ``apply``; the only public state they
expose is the :class:`QueryCounter` that records every forward or inverse use.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NumericalError, ValidationError
from .walsh import fwht, is_power_of_two

CONSTRUCTION_TOL = 1e-12
DRIFT_TOL = 1e-10
UNIT_TOL = 1e-9

Control = Sequence[tuple[int, int]]


class QuantumState:
    """Unit-norm complex amplitudes over a product of registers."""

    __slots__ = ("dims", "amps")

    def __init__(self, dims: Sequence[int], amps, *, tol: float = DRIFT_TOL):
        dims = tuple(int(x) for x in dims)
        if not dims or any(x < 1 for x in dims):
            raise ValidationError(f"register dims must be positive, got {dims}")
        amps = np.array(amps, dtype=np.complex128).reshape(-1)
        if amps.size != math.prod(dims):
            raise ValidationError(f"{amps.size} amplitudes do not fit dims {dims}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > tol:
            raise NumericalError(f"state norm {norm!r} deviates from 1 by more than {tol}")
        amps.setflags(write=False)
        self.dims = dims
        self.amps = amps

    @classmethod
    def basis(cls, dims: Sequence[int], index: Sequence[int]) -> "QuantumState":
        dims = tuple(dims)
        amps = np.zeros(math.prod(dims), dtype=np.complex128)
        amps[np.ravel_multi_index(tuple(index), dims)] = 1.0
        return cls(dims, amps)

    @classmethod
    def zero(cls, dims: Sequence[int]) -> "QuantumState":
        return cls.basis(dims, (0,) * len(dims))

    @property
    def tensor(self) -> np.ndarray:
        return self.amps.reshape(self.dims)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def kron(self, other: "QuantumState") -> "QuantumState":
        return QuantumState(self.dims + other.dims, np.kron(self.amps, other.amps))

    def regroup(self, dims: Sequence[int]) -> "QuantumState":
        """Relabel registers without moving amplitudes (merge or split adjacent axes)."""
        dims = tuple(int(x) for x in dims)
        if math.prod(dims) != self.amps.size:
            raise ValidationError(f"cannot regroup {self.dims} as {dims}")
        return QuantumState(dims, self.amps)

    def with_phase(self, phase: complex) -> "QuantumState":
        return QuantumState(self.dims, self.amps * phase)

    def __repr__(self) -> str:
        return f"QuantumState(dims={self.dims})"


def _check_registers(dims, registers) -> tuple[int, ...]:
    regs = tuple(int(r) for r in registers)
    if len(set(regs)) != len(regs) or any(r < 0 or r >= len(dims) for r in regs):
        raise ValidationError(f"invalid register selection {regs} for dims {dims}")
    return regs


def transform_registers(
    state: QuantumState,
    block_map: Callable[[np.ndarray], np.ndarray],
    registers: Sequence[int],
    control: Control | None = None,
) -> QuantumState:
    """Apply a linear map to the selected registers, optionally controlled.

    ``block_map`` receives a ``(dim_selected, ncols)`` matrix whose columns are
    the slices of the state for fixed values of the remaining registers, and
    must return a matrix of the same shape. ``control`` is a list of
    ``(register, value)`` pairs; columns where any control register differs
    from its value are left untouched.
    """
    dims = state.dims
    regs = _check_registers(dims, registers)
    others = [i for i in range(len(dims)) if i not in regs]
    perm = list(regs) + others
    t = np.transpose(state.tensor, perm)
    sel = math.prod(dims[r] for r in regs)
    block = np.array(t.reshape(sel, -1))
    if control:
        other_dims = [dims[i] for i in others]
        coords = np.unravel_index(np.arange(block.shape[1]), other_dims) if other_dims else ()
        mask = np.ones(block.shape[1], dtype=bool)
        for reg, value in control:
            if reg in regs or reg not in others:
                raise ValidationError(f"control register {reg} overlaps target or is invalid")
            mask &= coords[others.index(reg)] == value
        if mask.any():
            block[:, mask] = block_map(block[:, mask])
    else:
        block = block_map(block)
    out = np.transpose(block.reshape([dims[i] for i in perm]), np.argsort(perm))
    return QuantumState(dims, out.reshape(-1))


def apply_unitary(
    state: QuantumState,
    matrix: np.ndarray,
    registers: Sequence[int],
    control: Control | None = None,
) -> QuantumState:
    matrix = np.asarray(matrix)
    return transform_registers(state, lambda b: matrix @ b, registers, control)


def apply_diagonal(state: QuantumState, phases: np.ndarray, registers: Sequence[int],
                   control: Control | None = None) -> QuantumState:
    phases = np.asarray(phases).reshape(-1, 1)
    return transform_registers(state, lambda b: phases * b, registers, control)


class QueryCounter:
    """Monotone, thread-safe count of oracle uses."""

    def __init__(self) -> None:
        self._count = 0
        self._lock = threading.Lock()

    @property
    def count(self) -> int:
        return self._count

    def tick(self, k: int = 1) -> None:
        if k < 0:
            raise ValueError("query counter cannot decrease")
        with self._lock:
            self._count += k

    def __repr__(self) -> str:
        return f"QueryCounter({self._count})"


@dataclass(frozen=True)
class HiddenStates:
    """The unknown states ``xi_k``, one row per index ``k`` (shape ``(n, d)``)."""

    xi: np.ndarray

    def __post_init__(self):
        xi = np.atleast_2d(np.asarray(self.xi, dtype=np.complex128))
        if xi.ndim != 2:
            raise ValidationError("hidden states must be an (n, d) array")
        norms = np.linalg.norm(xi, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise ValidationError(f"hidden states must be unit vectors, norms {norms}")
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)

    @property
    def n(self) -> int:
        return self.xi.shape[0]

    @property
    def d(self) -> int:
        return self.xi.shape[1]


def random_hidden_states(n: int, d: int, rng: np.random.Generator) -> HiddenStates:
    z = rng.normal(size=(n, d)) + 1j * rng.normal(size=(n, d))
    return HiddenStates(z / np.linalg.norm(z, axis=1, keepdims=True))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def weighted_superposition(pi: np.ndarray, hidden: HiddenStates) -> QuantumState:
    """``sum_k pi_k |xi_k>|k>`` on registers ``[d, n]``."""
    pi = np.asarray(pi, dtype=float)
    vec = (hidden.xi.T * pi[None, :]).reshape(-1)
    return QuantumState((hidden.d, hidden.n), vec, tol=UNIT_TOL)


class UnitaryOracle:
    """A query-counted unitary acting on a fixed block of registers."""

    def __init__(self, matrix: np.ndarray, dims: Sequence[int], counter: QueryCounter | None = None):
        matrix = np.asarray(matrix, dtype=np.complex128)
        dim = math.prod(dims)
        if matrix.shape != (dim, dim):
            raise ValidationError(f"oracle matrix shape {matrix.shape} does not match dims {tuple(dims)}")
        self._matrix = matrix
        self.dims = tuple(int(x) for x in dims)
        self.counter = counter if counter is not None else QueryCounter()

    def apply(self, state: QuantumState, registers: Sequence[int], inverse: bool = False,
              control: Control | None = None) -> QuantumState:
        if tuple(state.dims[r] for r in registers) != self.dims:
            raise ValidationError(
                f"oracle acts on dims {self.dims}, selected registers have "
                f"{tuple(state.dims[r] for r in registers)}")
        m = self._matrix.conj().T if inverse else self._matrix
        out = apply_unitary(state, m, registers, control)
        self.counter.tick()
        return out

    def _dense_matrix(self) -> np.ndarray:
        # test fixtures only
        return self._matrix.copy()


class PreparationOracle(UnitaryOracle):
    """Unitary ``O`` on ``[d, n]`` with ``O|0,0> = sum_k pi_k |xi_k>|k>``."""


def make_preparation_oracle(pi, xi: HiddenStates | np.ndarray, seed: int,
                            counter: QueryCounter | None = None) -> PreparationOracle:
    """Build a preparation oracle whose action off ``|0>`` is a seeded unitary completion.

    The first column is the hidden superposition; the remaining columns come
    from QR-orthogonalising seeded Gaussian vectors against it, so any seed
    gives a valid oracle and the same seed always gives the same one.
    """
    hidden = xi if isinstance(xi, HiddenStates) else HiddenStates(xi)
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1 or pi.size != hidden.n:
        raise ValidationError(f"pi has {pi.size} entries but there are {hidden.n} hidden states")
    if np.any(pi < 0) or abs(np.linalg.norm(pi) - 1.0) > UNIT_TOL:
        raise ValidationError("pi must be a nonnegative unit vector")
    v = weighted_superposition(pi, hidden).amps
    dim = v.size
    rng = np.random.default_rng(seed)
    basis = np.empty((dim, dim), dtype=np.complex128)
    basis[:, 0] = v
    if dim > 1:
        basis[:, 1:] = rng.normal(size=(dim, dim - 1)) + 1j * rng.normal(size=(dim, dim - 1))
    q, r = np.linalg.qr(basis)
    # Q[:,0] * R[0,0] == v and |R[0,0]| == 1, so rescaling keeps Q unitary
    q[:, 0] *= r[0, 0]
    return PreparationOracle(q, (hidden.d, hidden.n), counter)


class ReflectionOracle:
    """``I - 2|t><t|`` for a hidden target ``t``; one query per use."""

    def __init__(self, target: QuantumState, counter: QueryCounter | None = None):
        self._target = target.amps.copy()
        self.dims = target.dims
        self.counter = counter if counter is not None else QueryCounter()

    def apply(self, state: QuantumState, registers: Sequence[int], inverse: bool = False,
              control: Control | None = None) -> QuantumState:
        if tuple(state.dims[r] for r in registers) != self.dims:
            raise ValidationError(f"reflection acts on dims {self.dims}")
        t = self._target.reshape(-1, 1)
        out = transform_registers(state, lambda b: b - 2.0 * t @ (t.conj().T @ b), registers, control)
        self.counter.tick()
        return out


def apply_oracle(state: QuantumState, oracle, inverse: bool = False,
                 target_registers: Sequence[int] = (0, 1), control: Control | None = None) -> QuantumState:
    return oracle.apply(state, target_registers, inverse=inverse, control=control)


def reflect_coin_Z(state: QuantumState) -> QuantumState:
    """Pauli Z on the last register (the coin); costs no queries."""
    if state.dims[-1] != 2:
        raise ValidationError("last register is not a qubit coin")
    t = np.array(state.tensor)
    t[..., 1] *= -1
    return QuantumState(state.dims, t.reshape(-1))


def register_probabilities(state: QuantumState, register: int) -> np.ndarray:
    """Exact Born distribution of one register."""
    _check_registers(state.dims, (register,))
    t = np.moveaxis(np.abs(state.tensor) ** 2, register, 0)
    return t.reshape(state.dims[register], -1).sum(axis=1)


def project_register(state: QuantumState, register: int, outcome: int) -> tuple[QuantumState, float]:
    probs = register_probabilities(state, register)
    prob = float(probs[outcome])
    if prob < 1e-14:
        raise NumericalError(f"projection onto outcome {outcome} has negligible weight {prob!r}")
    t = np.zeros_like(state.tensor)
    idx = [slice(None)] * len(state.dims)
    idx[register] = outcome
    t[tuple(idx)] = state.tensor[tuple(idx)]
    return QuantumState(state.dims, t.reshape(-1) / math.sqrt(prob)), prob


def measure_register(state: QuantumState, register: int,
                     rng: np.random.Generator) -> tuple[int, QuantumState, float]:
    """Sample a projective measurement; returns outcome, post-state and exact probability."""
    probs = register_probabilities(state, register)
    outcome = int(rng.choice(probs.size, p=probs / probs.sum()))
    post, prob = project_register(state, register, outcome)
    return outcome, post, prob


def overlap(a: QuantumState, b: QuantumState) -> complex:
    """``<a|b>``."""
    if a.dims != b.dims:
        raise ValidationError(f"dimension mismatch {a.dims} vs {b.dims}")
    return complex(np.vdot(a.amps, b.amps))


def hadamard_all(state: QuantumState, register: int) -> QuantumState:
    dim = state.dims[register]
    if not is_power_of_two(dim):
        raise ValidationError(f"register of dimension {dim} is not a qubit register")
    scale = 1.0 / math.sqrt(dim)
    return transform_registers(state, lambda b: fwht(b, axis=0) * scale, (register,))


def drop_last_register(state: QuantumState, value: int = None) -> QuantumState:
    """Remove the last register, which must be in a definite basis state."""
    t = state.tensor
    if value is None:
        value = int(np.argmax(register_probabilities(state, len(state.dims) - 1)))
    return QuantumState(state.dims[:-1], t[..., value].reshape(-1))


def append_register(state: QuantumState, dim: int, value: int = 0) -> QuantumState:
    return state.kron(QuantumState.basis((dim,), (value,)))
