"""Water-filling vectors and their optimality certificates.

Given nonnegative unit vectors ``pi`` and ``sigma`` and a target probability
``p``, the water-filling vector is ``eps_k = min(pi_k, gamma * sigma_k)`` at
the level ``gamma`` where ``(sigma . eps / |eps|)^2 == p``. Its squared norm is
the optimum of a small semidefinite program, and :func:`dual_witness` returns a
closed-form dual point that proves it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError, NumericalError, ProbabilityRangeError, ValidationError

UNIT_TOL = 1e-9
P_TOL = 1e-10
TIE_TOL = 1e-12
MAX_BISECT = 200


@dataclass(frozen=True)
class Bounds:
    p_min: float
    p_max: float
    gamma_min: float
    gamma_max: float  # +inf when some pi_k > 0 has sigma_k == 0


@dataclass(frozen=True)
class WaterFillSolution:
    gamma_bar: float
    epsilon: np.ndarray
    p: float
    bounds: Bounds

    @property
    def p_min(self) -> float:
        return self.bounds.p_min

    @property
    def p_max(self) -> float:
        return self.bounds.p_max

    @property
    def gamma_min(self) -> float:
        return self.bounds.gamma_min

    @property
    def gamma_max(self) -> float:
        return self.bounds.gamma_max

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.epsilon))

    @property
    def objective(self) -> float:
        return float(self.epsilon @ self.epsilon)


@dataclass(frozen=True)
class DualWitness:
    lam: np.ndarray  # full length; entries off the support of pi are 0 and carry no weight
    mu: float
    objective: float
    support: np.ndarray


@dataclass
class Certificate:
    passed: bool
    objective_primal: float
    objective_dual: float | None
    checks: dict = field(default_factory=dict)  # name -> (ok, slack)

    def violations(self) -> list[str]:
        return [name for name, (ok, _) in self.checks.items() if not ok]


def as_amplitudes(v, name: str = "vector", unit: bool = True) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValidationError(f"{name} must be a nonempty 1-d array")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise ValidationError(f"{name} must have finite nonnegative entries")
    if unit and abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise ValidationError(f"{name} must have unit 2-norm, got {np.linalg.norm(v)!r}")
    return v


def _pair(pi, sigma) -> tuple[np.ndarray, np.ndarray]:
    pi = as_amplitudes(pi, "pi")
    sigma = as_amplitudes(sigma, "sigma")
    if pi.shape != sigma.shape:
        raise ValidationError(f"pi and sigma lengths differ: {pi.size} vs {sigma.size}")
    return pi, sigma


def compute_bounds(pi, sigma) -> Bounds:
    pi, sigma = _pair(pi, sigma)
    on = pi > 0
    p_min = min(1.0, float(sigma @ pi) ** 2)
    p_max = min(1.0, float(np.sum(sigma[on] ** 2)))
    with np.errstate(divide="ignore"):
        ratio = np.where(sigma > 0, pi / np.where(sigma > 0, sigma, 1.0), np.inf)
    ratio_on = ratio[on]
    gamma_min = float(ratio_on.min())
    gamma_max = float(ratio.max()) if np.any(on & (sigma == 0)) else float(ratio[sigma > 0].max())
    return Bounds(p_min, p_max, gamma_min, gamma_max)


def epsilon_of_gamma(pi, sigma, gamma: float) -> np.ndarray:
    pi, sigma = _pair(pi, sigma)
    if gamma < 0:
        raise ValidationError("gamma must be nonnegative")
    if gamma == math.inf:
        return pi.copy()
    return np.minimum(pi, gamma * sigma)


def _p_of_eps(sigma: np.ndarray, eps: np.ndarray) -> float:
    nrm = np.linalg.norm(eps)
    if nrm == 0:
        raise ValidationError("epsilon vanishes; p is undefined")
    return float((sigma @ eps / nrm) ** 2)


def p_of_gamma(pi, sigma, gamma: float) -> float:
    if gamma <= 0:
        raise ValidationError("p(gamma) is undefined at gamma = 0")
    pi, sigma = _pair(pi, sigma)
    return _p_of_eps(sigma, epsilon_of_gamma(pi, sigma, gamma))


def waterfill(pi, sigma, p: float) -> WaterFillSolution:
    """Solve for the water-filling vector at success probability ``p``.

    Raises :class:`ProbabilityRangeError` below ``p_min`` and
    :class:`InfeasibleError` above ``p_max``; both carry the endpoints.
    """
    pi, sigma = _pair(pi, sigma)
    b = compute_bounds(pi, sigma)
    p = float(p)
    if not (0.0 <= p <= 1.0):
        raise ValidationError(f"p must lie in [0, 1], got {p!r}")
    if p > b.p_max + TIE_TOL:
        raise InfeasibleError(p, b.p_min, b.p_max)
    if p < b.p_min - TIE_TOL:
        raise ProbabilityRangeError(p, b.p_min, b.p_max)

    on = pi > 0
    if abs(p - b.p_min) <= TIE_TOL:
        return WaterFillSolution(b.gamma_max, pi.copy(), b.p_min, b)
    if abs(p - b.p_max) <= TIE_TOL:
        eps = np.where(on, b.gamma_min * sigma, 0.0)
        return WaterFillSolution(b.gamma_min, eps, b.p_max, b)

    zero_sigma = on & (sigma == 0)
    if zero_sigma.any():
        # Components with sigma_k = 0 only fill once every other tank is full
        # (the sigma_k -> 0 limit); below that threshold p is met by scaling them.
        full = on & ~zero_sigma
        sp = float(sigma @ pi)
        p_threshold = sp ** 2 / float(np.sum(pi[full] ** 2))
        if p < p_threshold:
            s2 = (sp ** 2 / p - np.sum(pi[full] ** 2)) / np.sum(pi[zero_sigma] ** 2)
            s = math.sqrt(min(1.0, max(0.0, s2)))
            eps = np.where(zero_sigma, s * pi, pi)
            return _checked(WaterFillSolution(math.inf, eps, p, b), sigma, p)
        hi = float((pi[full] / sigma[full]).max())
    else:
        hi = b.gamma_max

    lo = b.gamma_min
    # p(gamma) decreases: p(lo) = p_max > p > p(hi)
    for _ in range(MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _p_of_eps(sigma, np.minimum(pi, mid * sigma)) > p:
            lo = mid
        else:
            hi = mid
    gamma = 0.5 * (lo + hi)
    return _checked(WaterFillSolution(gamma, np.minimum(pi, gamma * sigma), p, b), sigma, p)


def _checked(sol: WaterFillSolution, sigma: np.ndarray, p: float) -> WaterFillSolution:
    got = _p_of_eps(sigma, sol.epsilon)
    if abs(got - p) > P_TOL:
        raise NumericalError(f"water-filling reached p={got!r}, wanted {p!r}")
    return sol


def dual_witness(pi, sigma, p: float, solution: WaterFillSolution | None = None) -> DualWitness:
    """Closed-form dual point whose objective equals ``|eps|^2``.

    Entries with ``pi_k = 0`` are outside the primal's reach (they force
    ``M_kk = 0``), so the witness lives on the support of ``pi``. At ``p_min``
    the witness is ``lambda = 1, mu = 0``.
    """
    pi, sigma = _pair(pi, sigma)
    sol = solution if solution is not None else waterfill(pi, sigma, p)
    b = sol.bounds
    sup = pi > 0
    lam = np.zeros_like(pi)
    eps = sol.epsilon
    if abs(p - b.p_min) <= TIE_TOL:
        lam[sup] = 1.0
        return DualWitness(lam, 0.0, float(np.sum(pi[sup] ** 2)), sup)
    if abs(p - b.p_max) <= TIE_TOL:
        raise ValidationError("no closed-form dual witness at p = p_max; certify the primal only")
    # Stationarity on an uncapped tank fixes mu; both expressions below are
    # sums and products of nonnegative terms, so nothing cancels near p_min.
    se = float(sigma @ eps)
    capped = sup & (eps >= pi)
    g = sol.gamma_bar
    if math.isfinite(g):
        excess = float(np.sum(pi[capped] * (g * sigma[capped] - pi[capped])))
        if excess <= 0:
            raise NumericalError("degenerate dual witness: no capped tank above its cap")
        mu = g * float(eps @ eps) / (se * excess)
        lam[capped] = mu * se * (g * sigma[capped] - pi[capped]) / (g * pi[capped])
    else:
        # sigma-free tanks still partly filled: the gamma -> inf limit
        mu = 1.0 / p
        lam[capped] = mu * se * sigma[capped] / pi[capped]
    return DualWitness(lam, float(mu), float(np.sum(lam * pi ** 2)), sup)


def slack_matrix(sigma, p: float, witness: DualWitness) -> np.ndarray:
    """``Lambda - I + mu (p I - sigma sigma^T)`` on the support of pi."""
    s = np.asarray(sigma, dtype=float)[witness.support]
    m = s.size
    return np.diag(witness.lam[witness.support]) - np.eye(m) + witness.mu * (p * np.eye(m) - np.outer(s, s))


def verify_duality(pi, sigma, p: float) -> Certificate:
    pi, sigma = _pair(pi, sigma)
    sol = waterfill(pi, sigma, p)
    p = sol.p
    eps = sol.epsilon
    M = np.outer(eps, eps)
    primal = float(np.trace(M))
    checks = {}
    cap = float(np.min(pi ** 2 - np.diag(M)))
    checks["diagonal_caps"] = (cap >= -1e-12, cap)
    trace_slack = float(np.trace((np.outer(sigma, sigma) - p * np.eye(pi.size)) @ M))
    checks["trace_inequality"] = (trace_slack >= -1e-10 * max(1.0, primal), trace_slack)

    dual_obj = None
    if abs(p - sol.bounds.p_max) > TIE_TOL:
        w = dual_witness(pi, sigma, p, sol)
        dual_obj = w.objective
        lam_min = float(w.lam[w.support].min())
        checks["lambda_nonnegative"] = (lam_min >= -1e-12, lam_min)
        checks["mu_nonnegative"] = (w.mu >= -1e-12, w.mu)
        eig = float(np.linalg.eigvalsh(slack_matrix(sigma, p, w)).min())
        checks["slack_psd"] = (eig >= -1e-10, eig)
        gap = abs(primal - dual_obj)
        checks["duality_gap"] = (gap <= 1e-8 * max(1.0, primal), gap)
    passed = all(ok for ok, _ in checks.values())
    return Certificate(passed, primal, dual_obj, checks)
