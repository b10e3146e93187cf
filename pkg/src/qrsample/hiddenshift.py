"""Boolean hidden shift via rejection sampling on the Fourier spectrum.

One query to the phase oracle ``O_s|x> = (-1)^{f(x+s)}|x>`` sandwiched between
Hadamards gives ``sum_w (-1)^{w.s} f^(w)|w>``. Resampling the magnitudes
``|f^(w)|`` toward the flat vector ``2^{-n/2}`` and applying Hadamards again
concentrates the state on ``|s>``.

Bit strings are integers with ``x_1`` as the most significant bit, and
``w.x`` is the parity of ``w & x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import PromiseError, ValidationError
from .qrs import plan_exact, reflection_from_preparation, rotation_R, subroutine_SQRS
from .statevector import (
    QuantumState,
    QueryCounter,
    apply_diagonal,
    hadamard_all,
    measure_register,
    register_probabilities,
)
from .walsh import fwht, is_power_of_two
from .waterfill import compute_bounds


def parity(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    out = np.zeros_like(a)
    while np.any(a):
        out ^= a & 1
        a = a >> 1
    return out


class BooleanFunction:
    def __init__(self, n: int, truth_table):
        tt = np.asarray(truth_table, dtype=np.int8).reshape(-1)
        if n < 0 or tt.size != 1 << n:
            raise ValidationError(f"truth table has {tt.size} entries, expected 2^{n}")
        if np.any((tt != 0) & (tt != 1)):
            raise ValidationError("truth table entries must be 0 or 1")
        tt.setflags(write=False)
        self.n = n
        self.truth_table = tt

    @classmethod
    def from_callable(cls, n: int, fn) -> "BooleanFunction":
        return cls(n, [int(fn(x)) & 1 for x in range(1 << n)])

    @classmethod
    def from_hex(cls, n: int, text: str) -> "BooleanFunction":
        """Hex digits, most significant first; bit ``x`` of the integer is ``f(x)``."""
        value = int(text.strip(), 16)
        return cls(n, [(value >> x) & 1 for x in range(1 << n)])

    @classmethod
    def from_bits(cls, n: int, text: str) -> "BooleanFunction":
        bits = "".join(text.split())
        return cls(n, [int(ch) for ch in bits])

    @property
    def size(self) -> int:
        return 1 << self.n

    @property
    def signs(self) -> np.ndarray:
        return 1.0 - 2.0 * self.truth_table

    @cached_property
    def spectrum(self) -> np.ndarray:
        out = wht(self)
        out.setflags(write=False)
        return out

    def shifted(self, s: int) -> "BooleanFunction":
        return BooleanFunction(self.n, self.truth_table[np.arange(self.size) ^ s])

    def __call__(self, x: int) -> int:
        return int(self.truth_table[x])


def wht(f: BooleanFunction) -> np.ndarray:
    """``f^(w) = 2^-n sum_x (-1)^{w.x + f(x)}`` by the fast butterfly."""
    if not is_power_of_two(f.truth_table.size):
        raise ValidationError("truth table length must be a power of two")
    return fwht(f.signs) / f.size


def wht_naive(f: BooleanFunction) -> np.ndarray:
    x = np.arange(f.size)
    chi = 1.0 - 2.0 * parity(x[:, None] & x[None, :])
    return chi @ f.signs / f.size


def bent_example(n: int = 4) -> BooleanFunction:
    """Inner product ``x1 x2 + x3 x4 + ...`` (n even)."""
    if n % 2:
        raise ValidationError("inner-product bent functions need even n")

    def ip(x):
        bits = [(x >> (n - 1 - k)) & 1 for k in range(n)]
        return sum(bits[2 * k] & bits[2 * k + 1] for k in range(n // 2)) & 1
    return BooleanFunction.from_callable(n, ip)


def delta_function(n: int, at: int = 0) -> BooleanFunction:
    return BooleanFunction.from_callable(n, lambda x: int(x == at))


class ShiftOracle:
    """``|x> -> (-1)^{f(x+s)} |x>``; one query per use."""

    def __init__(self, f: BooleanFunction, s: int, counter: QueryCounter | None = None):
        if not (0 <= s < f.size):
            raise ValidationError("shift out of range")
        self._phases = f.shifted(s).signs
        self.n = f.n
        self.counter = counter if counter is not None else QueryCounter()

    def apply(self, state: QuantumState, registers=(0,), inverse: bool = False, control=None) -> QuantumState:
        out = apply_diagonal(state, self._phases, registers, control)
        self.counter.tick()
        return out


def influence(f: BooleanFunction, v: int) -> float:
    """``Pr_x[f(x) != f(x+v)]``."""
    x = np.arange(f.size)
    return float(np.mean(f.truth_table != f.truth_table[x ^ v]))


def influences(f: BooleanFunction) -> np.ndarray:
    """All influences at once: ``I_f(v) = (1 - autocorrelation(v)) / 2``."""
    auto = fwht(f.spectrum ** 2)  # sum_w f^(w)^2 (-1)^{w.v}
    # influences are multiples of 2^-n; snap away rounding so periods give exactly 0
    return np.round((1.0 - auto) / 2 * f.size) / f.size


def min_influence(f: BooleanFunction) -> float:
    if f.n == 0:
        return 0.0
    return float(influences(f)[1:].min())


def check_promise(f: BooleanFunction) -> float:
    """Reject functions with a nonzero period (their shift is not identifiable)."""
    m = min_influence(f)
    if m <= 0:
        raise PromiseError("f has a nonzero period, so shifts are not identifiable")
    return m


def phi_state(f: BooleanFunction, s: int) -> QuantumState:
    """``2^{-n/2} sum_x (-1)^{f(x+s)} |x>`` built from the public truth table."""
    return QuantumState((f.size,), f.shifted(s).signs / math.sqrt(f.size))


class FourierShiftPreparation:
    """``D H O_s H`` on ``[1, 2^n]``, with ``D`` the known spectrum signs.

    Maps ``|0>`` to ``sum_w |f^(w)| (-1)^{w.s} |w>``: a preparation oracle
    with ``pi_w = |f^(w)|`` and hidden phases ``xi_w = (-1)^{w.s}``.
    """

    def __init__(self, oracle: ShiftOracle, f_public: BooleanFunction):
        self._oracle = oracle
        sgn = np.sign(f_public.spectrum)
        self._signs = np.where(sgn == 0, 1.0, sgn)
        self.dims = (1, f_public.size)
        self.counter = oracle.counter

    def apply(self, state: QuantumState, registers=(0, 1), inverse: bool = False, control=None) -> QuantumState:
        reg = registers[1]
        if control:
            raise ValidationError("controlled preparation is not supported")
        if inverse:
            state = apply_diagonal(state, self._signs, (reg,))
        state = hadamard_all(state, reg)
        state = self._oracle.apply(state, (reg,))
        state = hadamard_all(state, reg)
        if not inverse:
            state = apply_diagonal(state, self._signs, (reg,))
        return state


def prepare_psi_fhat(oracle: ShiftOracle) -> QuantumState:
    """``H O_s H |0>`` on one ``2^n`` register; one query."""
    state = QuantumState.zero((1 << oracle.n,))
    state = hadamard_all(state, 0)
    state = oracle.apply(state, (0,))
    return hadamard_all(state, 0)


def spectrum_pair(f: BooleanFunction) -> tuple[np.ndarray, np.ndarray]:
    pi = np.abs(f.spectrum)
    pi = pi / np.linalg.norm(pi)  # exact up to rounding by Parseval
    sigma = np.full(f.size, 1 / math.sqrt(f.size))
    return pi, sigma


@dataclass
class BHSPResult:
    s_hat: int
    queries: int
    accept: bool
    p: float
    epsilon_norm: float
    distribution: np.ndarray  # exact Pr[s_hat = x] given the coin outcome observed
    plan_queries: int


def run_bhsp(oracle: ShiftOracle, f_public: BooleanFunction, p: float,
             rng: np.random.Generator, check: bool = True) -> BHSPResult:
    if check:
        check_promise(f_public)
    pi, sigma = spectrum_pair(f_public)
    plan = plan_exact(pi, sigma, p)
    prep = FourierShiftPreparation(oracle, f_public)
    start = oracle.counter.count
    rot = rotation_R(pi, plan.epsilon_scaled)
    state = rot.apply(prep.apply(QuantumState.zero((1, f_public.size, 2)), (0, 1)))
    state = subroutine_SQRS(state, reflection_from_preparation(prep), rot, t=plan.t_tilde)
    accept_bit, state, _ = measure_register(state, 2, rng)
    state = hadamard_all(state, 1)
    dist = register_probabilities(state, 1)
    s_hat, _, _ = measure_register(state, 1, rng)
    return BHSPResult(s_hat, oracle.counter.count - start, accept_bit == 1, plan.p,
                      float(np.linalg.norm(plan.epsilon)), dist, plan.queries)


@dataclass
class CheckResult:
    accept: bool
    rounds: int  # rounds actually run (stops at the first rejection)
    queries: int
    round_accept_probability: float

    def __bool__(self) -> bool:
        return self.accept


def check_round_state(oracle: ShiftOracle, f_public: BooleanFunction, v: int) -> QuantumState:
    """Controlled comparison of ``|phi_f(s)>`` and ``|phi_f(v)>`` on ``[control, 2^n]``; one query."""
    N = f_public.size
    state = QuantumState.zero((2, N))
    state = hadamard_all(state, 0)
    state = hadamard_all(state, 1)
    state = oracle.apply(state, (1,), control=((0, 0),))
    state = apply_diagonal(state, f_public.shifted(v).signs, (1,), control=((0, 1),))
    return hadamard_all(state, 0)


def check_shift(oracle: ShiftOracle, f_public: BooleanFunction, v: int, rounds: int,
                rng: np.random.Generator) -> CheckResult:
    """One-sided test: never rejects ``v = s``; a wrong ``v`` survives a round with prob ``1 - I_f(s+v)``."""
    if rounds < 1:
        raise ValidationError("rounds must be at least 1")
    start = oracle.counter.count
    prob = None
    for k in range(1, rounds + 1):
        state = check_round_state(oracle, f_public, v)
        prob = float(register_probabilities(state, 0)[0])
        outcome, _, _ = measure_register(state, 0, rng)
        if outcome != 0:
            return CheckResult(False, k, oracle.counter.count - start, prob)
    return CheckResult(True, rounds, oracle.counter.count - start, prob)


def cut_spectrum(f: BooleanFunction, gamma: float) -> tuple[np.ndarray, float, float]:
    """``eps_w = min(|f^(w)|, gamma / 2^{n/2})``; returns ``eps``, ``p`` and ``|eps^|_1^2 / 2^n``."""
    if not (0 <= gamma <= 1):
        raise ValidationError("gamma must lie in [0, 1]")
    pi, sigma = spectrum_pair(f)
    eps = np.minimum(pi, gamma * sigma)
    nrm = np.linalg.norm(eps)
    if nrm == 0:
        raise ValidationError("gamma cuts every Fourier coefficient; p is undefined")
    p = float((sigma @ eps / nrm) ** 2)
    l1 = float(np.sum(eps / nrm))
    return eps, p, l1 ** 2 / f.size


@dataclass
class BoostResult:
    s_hat: int
    queries: int
    attempts: int
    p: float
    p_l1: float  # the same p recovered from the l1 norm of the normalised cut vector
    epsilon_norm: float
    rounds: int
    min_influence: float


def boosted_bhsp(oracle: ShiftOracle, f_public: BooleanFunction, gamma: float, delta: float,
                 rng: np.random.Generator, max_attempts: int = 100_000) -> BoostResult:
    """Repeat the sampler and keep the first candidate that passes the check."""
    if delta <= 0 or delta >= 1:
        raise ValidationError("delta must lie in (0, 1)")
    i_f = check_promise(f_public)
    eps, p, p_l1 = cut_spectrum(f_public, gamma)
    pi, sigma = spectrum_pair(f_public)
    b = compute_bounds(pi, sigma)
    p_run = min(p, b.p_max)
    # each wrong candidate escapes with prob <= delta * p; expected attempts <= 1/p
    rounds = max(1, math.ceil(math.log(1 / (delta * p)) / i_f))
    start = oracle.counter.count
    for attempt in range(1, max_attempts + 1):
        res = run_bhsp(oracle, f_public, p_run, rng, check=False)
        if check_shift(oracle, f_public, res.s_hat, rounds, rng):
            return BoostResult(res.s_hat, oracle.counter.count - start, attempt, p, p_l1,
                               res.epsilon_norm, rounds, i_f)
    raise ValidationError(f"no candidate passed after {max_attempts} attempts")


def shift_distribution(f: BooleanFunction, s: int, p: float) -> np.ndarray:
    """Exact output distribution of :func:`run_bhsp` conditioned on acceptance (no sampling)."""
    rng = np.random.default_rng(0)
    oracle = ShiftOracle(f, s)
    res = run_bhsp(oracle, f, p, rng)
    return res.distribution
