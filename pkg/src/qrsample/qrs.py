"""Quantum rejection sampling with exact amplitude amplification.

Workspace layout is ``[d, n, 2]``: hidden-state register, index register and
a coin qubit whose ``|1>`` branch means "accept". The coin rotation ``R_eps``
turns ``|pi^xi>|0>`` into a state whose accepted branch is proportional to
``sum_k eps_k |xi_k>|k>``; amplitude amplification then drives the coin to
``|1>`` with certainty after shrinking ``eps`` by a factor ``r`` so the rotation
angle divides ``pi/2`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError, ProbabilityRangeError, ValidationError
from .statevector import (
    Control,
    PreparationOracle,
    QuantumState,
    QueryCounter,
    apply_diagonal,
    append_register,
    measure_register,
    overlap,
    reflect_coin_Z,
    register_probabilities,
    weighted_superposition,
)
from .waterfill import WaterFillSolution, as_amplitudes, compute_bounds, waterfill


class CoinRotation:
    """``sum_k |k><k| (x) Rot(k)`` with ``Rot(k) = [[c, -s], [s, c]]`` acting on ``[index, coin]``."""

    def __init__(self, sines):
        s = np.asarray(sines, dtype=float)
        if np.any(s < -1e-12) or np.any(s > 1 + 1e-12):
            raise ValidationError("rotation sines must lie in [0, 1]")
        self.sines = np.clip(s, 0.0, 1.0)
        self.cosines = np.sqrt(1.0 - self.sines ** 2)

    def block(self, k: int) -> np.ndarray:
        c, s = self.cosines[k], self.sines[k]
        return np.array([[c, -s], [s, c]])

    def apply(self, state: QuantumState, inverse: bool = False) -> QuantumState:
        """Act on the last two registers (index, coin) of ``state``."""
        if state.dims[-1] != 2 or state.dims[-2] != self.sines.size:
            raise ValidationError(f"rotation for {self.sines.size} indices cannot act on dims {state.dims}")
        t = state.amps.reshape(-1, self.sines.size, 2)
        s = -self.sines if inverse else self.sines
        c = self.cosines
        out = np.empty_like(t)
        out[..., 0] = c * t[..., 0] - s * t[..., 1]
        out[..., 1] = s * t[..., 0] + c * t[..., 1]
        return QuantumState(state.dims, out.reshape(-1))


def rotation_R(pi, epsilon) -> CoinRotation:
    """Coin rotation with sine ``eps_k / pi_k``; identity on blocks where ``pi_k = 0``."""
    pi = as_amplitudes(pi, "pi", unit=False)
    eps = as_amplitudes(epsilon, "epsilon", unit=False)
    if pi.shape != eps.shape:
        raise ValidationError("pi and epsilon lengths differ")
    if np.any(eps > pi + 1e-12):
        raise ValidationError("epsilon must satisfy eps_k <= pi_k")
    sines = np.divide(eps, pi, out=np.zeros_like(pi), where=pi > 0)
    return CoinRotation(np.minimum(sines, 1.0))


@dataclass(frozen=True)
class ExactAmplificationPlan:
    theta: float
    t_tilde: int
    theta_tilde: float
    r: float
    epsilon: np.ndarray  # water-filling vector before scaling
    epsilon_scaled: np.ndarray
    p: float  # success probability the plan delivers
    solution: WaterFillSolution | None = None

    @property
    def queries(self) -> int:
        return 2 * self.t_tilde + 1


def amplification_constants(norm: float) -> tuple[float, int, float, float]:
    """``(theta, t_tilde, theta_tilde, r)`` for an accepting amplitude ``norm``."""
    if not (0.0 < norm <= 1.0 + 1e-12):
        raise ValidationError(f"accepting amplitude must lie in (0, 1], got {norm!r}")
    # asin is ill-conditioned at 1: a unit norm off by one ulp would lose 1.5e-8 of theta
    theta = math.pi / 2 if norm >= 1.0 - 1e-12 else math.asin(norm)
    # the guard keeps exact integers (e.g. norm = 1/2) from rounding up
    t_tilde = max(0, math.ceil(math.pi / (4 * theta) - 0.5 - 1e-12))
    theta_tilde = math.pi / (2 * (2 * t_tilde + 1))
    r = min(1.0, math.sin(theta_tilde) / math.sin(theta))
    return theta, t_tilde, theta_tilde, r


def plan_exact(pi, sigma, p: float) -> ExactAmplificationPlan:
    """Plan an exact run reaching success probability ``p``.

    Below ``p_min`` the plan is the one-query "prepare and stop" plan with
    ``eps = pi``. Above ``p_max`` raises :class:`InfeasibleError`.
    """
    pi = as_amplitudes(pi, "pi")
    sigma = as_amplitudes(sigma, "sigma")
    try:
        sol = waterfill(pi, sigma, p)
        eps, achieved = sol.epsilon, sol.p
    except InfeasibleError:
        raise
    except ProbabilityRangeError:
        sol = None
        eps, achieved = pi.copy(), compute_bounds(pi, sigma).p_min
    theta, t, theta_t, r = amplification_constants(float(np.linalg.norm(eps)))
    return ExactAmplificationPlan(theta, t, theta_t, r, eps, r * eps, achieved, sol)


def build_state_Psi_eps(oracle: PreparationOracle, pi, epsilon) -> QuantumState:
    """``sum_k |xi_k>|k>(sqrt(pi_k^2 - eps_k^2)|0> + eps_k|1>)``; one query."""
    rot = rotation_R(pi, epsilon)
    state = QuantumState.zero(oracle.dims + (2,))
    state = oracle.apply(state, (0, 1))
    return rot.apply(state)


class PreparationReflection:
    """Reflection through ``O|0>`` built from two uses of a preparation oracle.

    ``apply(state, registers, control)`` computes ``O (I - 2|0><0|) O^dagger``
    on ``registers``; with ``control`` only the phase is conditioned, which
    is enough because ``O`` and ``O^dagger`` cancel elsewhere.
    """

    def __init__(self, oracle: PreparationOracle):
        self._oracle = oracle
        self.dims = oracle.dims
        self.counter = oracle.counter

    def apply(self, state: QuantumState, registers=(0, 1), inverse: bool = False,
              control: Control | None = None) -> QuantumState:
        regs = tuple(registers)
        state = self._oracle.apply(state, regs, inverse=True)
        size = math.prod(state.dims[r] for r in regs)
        phases = np.ones(size)
        phases[0] = -1.0
        state = apply_diagonal(state, phases, regs, control)
        return self._oracle.apply(state, regs)


def reflection_from_preparation(oracle: PreparationOracle) -> PreparationReflection:
    return PreparationReflection(oracle)


def subroutine_SQRS(state: QuantumState, reflection, pi_or_rotation, epsilon=None, t: int = 0) -> QuantumState:
    """``t`` rounds of (coin Z, then reflection through ``R_eps |pi^xi>|0>``).

    ``reflection`` must reflect registers ``(0, 1)`` through ``|pi^xi>`` when
    the coin is ``|0>``; it may be a :class:`PreparationReflection` (two
    queries per round) or a reflection oracle (one query per round). Each
    round is minus the textbook Grover iterate, so ``t`` rounds carry a global
    sign ``(-1)^t``.
    """
    rot = pi_or_rotation if isinstance(pi_or_rotation, CoinRotation) else rotation_R(pi_or_rotation, epsilon)
    if t < 0:
        raise ValidationError("t must be nonnegative")
    for _ in range(t):
        state = reflect_coin_Z(state)
        state = rot.apply(state, inverse=True)
        state = reflection.apply(state, (0, 1), control=((2, 0),))
        state = rot.apply(state)
    return state


@dataclass
class RunResult:
    final_state: QuantumState
    accept: bool
    queries: int
    accept_probability: float
    success_overlap: float | None = None
    pre_measurement_state: QuantumState | None = None
    p: float | None = None
    plan: ExactAmplificationPlan | None = None
    levels: list = field(default_factory=list)  # (level, T_l, t, failed) per amplification attempt
    accepted_level: int | None = None  # -1 when the first measurement accepts

    @property
    def output_state(self) -> QuantumState:
        """First two registers of the accepted state (coin dropped)."""
        t = self.final_state.tensor
        return QuantumState(self.final_state.dims[:-1], t[..., 1 if self.accept else 0].reshape(-1))


def target_state(sigma, hidden) -> QuantumState:
    """``|sigma^xi> (x) |1>`` on ``[d, n, 2]``; test-side knowledge only."""
    return append_register(weighted_superposition(sigma, hidden), 2, 1)


def run_AQRS(oracle: PreparationOracle, pi, sigma, p: float, rng: np.random.Generator,
             target: QuantumState | None = None) -> RunResult:
    """Run the exact rejection sampler; ``2 t_tilde + 1`` queries.

    ``target``, if given, is ``|sigma^xi>|1>`` and is only used to report
    ``Re<target|final>`` before the coin measurement.
    """
    plan = plan_exact(pi, sigma, p)
    start = oracle.counter.count
    rot = rotation_R(pi, plan.epsilon_scaled)
    state = rot.apply(oracle.apply(QuantumState.zero(oracle.dims + (2,)), (0, 1)))
    state = subroutine_SQRS(state, reflection_from_preparation(oracle), rot, t=plan.t_tilde)
    if plan.t_tilde % 2:
        state = state.with_phase(-1.0)
    pre = state
    accept_prob = float(register_probabilities(pre, 2)[1])
    outcome, post, _ = measure_register(pre, 2, rng)
    queries = oracle.counter.count - start
    ov = None if target is None else float(overlap(target, pre).real)
    return RunResult(post, outcome == 1, queries, accept_prob, ov, pre, plan.p, plan)
