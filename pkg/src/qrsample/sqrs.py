"""Strong quantum resampling from a single copy of ``|pi^xi>``.

Only the ratios ``tau`` between target and source amplitudes are known, so the
number of amplification rounds cannot be planned. Instead the sampler retries
on the rejected post-measurement state with a random round count drawn from
``1..T_l``, ``T_l = ceil(c^l)``, growing the range each level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .qrs import CoinRotation, RunResult, subroutine_SQRS
from .statevector import QuantumState, append_register, measure_register


@dataclass(frozen=True)
class Schedule:
    c: float = 8 / 7
    delta: float = 0.25
    r: float = math.sqrt(3) / 2
    max_level: int = 60

    def __post_init__(self):
        if self.c <= 1:
            raise ValidationError("schedule growth c must exceed 1")
        if not (0 < self.r <= 1):
            raise ValidationError("coin scale r must lie in (0, 1]")

    def T(self, level: int) -> int:
        # round away float noise so exact powers (e.g. c = 2) are not bumped up
        return math.ceil(round(self.c ** level, 9))

    def expected_query_bound(self, eps_norm: float) -> float:
        """Bound on expected rounds, ``2c^2/(Delta |eps|) (1/(c-1) + p/(1-cp))`` with ``p = 1/2 + Delta``."""
        pbar = 0.5 + self.delta
        if self.c * pbar >= 1:
            raise ValidationError("c * (1/2 + delta) must be below 1 for the bound to hold")
        return 2 * self.c ** 2 / (self.delta * eps_norm) * (1 / (self.c - 1) + pbar / (1 - self.c * pbar))


def as_ratios(tau) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    if tau.ndim != 1 or tau.size == 0 or np.any(tau < 0) or not np.all(np.isfinite(tau)):
        raise ValidationError("tau must be a nonempty nonnegative vector")
    if abs(tau.max() - 1.0) > 1e-12:
        raise ValidationError(f"tau must have maximum entry 1, got {tau.max()!r}")
    return tau


def coin_ratios(tau, alpha: float, r: float) -> np.ndarray:
    """Rotation sines ``r * min(1, alpha * tau_k)``; no knowledge of ``pi`` needed."""
    tau = as_ratios(tau)
    if alpha < 1:
        raise ValidationError("alpha must be at least 1")
    if not (0 < r <= 1):
        raise ValidationError("r must lie in (0, 1]")
    return r * np.minimum(1.0, alpha * tau)


def resampling_target(pi, tau) -> np.ndarray:
    """``pi o tau / |pi o tau|``, the amplitudes the sampler aims at."""
    v = np.asarray(pi, dtype=float) * as_ratios(tau)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValidationError("pi and tau have disjoint supports")
    return v / nrm


def resampling_epsilon(pi, tau, alpha: float, r: float = Schedule.r) -> np.ndarray:
    return np.asarray(pi, dtype=float) * coin_ratios(tau, alpha, r)


def level_failure_probability(t_max: int, epsilon_norm: float) -> float:
    """Upper bound ``1/2 + 1/(2 T |eps|)`` on one level's failure probability, clamped to 1."""
    if t_max < 1:
        raise ValidationError("T must be at least 1")
    if not (0 < epsilon_norm <= math.sqrt(3) / 2 + 1e-12):
        raise ValidationError("the bound needs 0 < |eps| <= sqrt(3)/2")
    return min(1.0, 0.5 + 1.0 / (2 * t_max * epsilon_norm))


def exact_level_failure_probability(t_max: int, epsilon_norm: float) -> float:
    """``(1/T) sum_{t=1..T} cos^2(2 t theta)`` with ``sin theta = |eps|``."""
    theta = math.asin(min(1.0, epsilon_norm))
    t = np.arange(1, t_max + 1)
    return float(np.mean(np.cos(2 * t * theta) ** 2))


def run_ASQRS(initial: QuantumState, reflection, tau, alpha: float, rng: np.random.Generator,
              schedule: Schedule = Schedule(), trace: list | None = None) -> RunResult:
    """Convert one copy of ``|pi^xi>`` (dims ``[d, n]``) into the resampled state.

    ``reflection.apply(state, (0, 1), control=((2, 0),))`` must reflect through
    ``|pi^xi>`` when the coin is ``|0>``; each use is one query. If ``trace``
    is a list, the state entering every amplification attempt is appended.
    """
    if len(initial.dims) != 2:
        raise ValidationError("initial state must live on [d, n]")
    rot = CoinRotation(coin_ratios(tau, alpha, schedule.r))
    start = reflection.counter.count
    state = rot.apply(append_register(initial, 2, 0))
    outcome, state, prob = measure_register(state, 2, rng)
    levels = []
    level = -1
    while outcome != 1:
        level += 1
        if level > schedule.max_level:
            raise NumericalError(f"no acceptance after {schedule.max_level} levels")
        if trace is not None:
            trace.append(state)
        T = schedule.T(level)
        t = int(rng.integers(1, T + 1))
        state = subroutine_SQRS(state, reflection, rot, t=t)
        outcome, state, prob = measure_register(state, 2, rng)
        levels.append((level, T, t, outcome != 1))
    queries = reflection.counter.count - start
    # accept_probability is the exact probability of the final, accepting measurement
    return RunResult(state, True, queries, prob, levels=levels, accepted_level=level)


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """``|<a|b>|^2``; insensitive to the global phase picked up by amplification."""
    return float(abs(np.vdot(a.amps, b.amps)) ** 2)
