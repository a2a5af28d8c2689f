"""Closed-form runtime bounds, thresholds and concentration inequalities.

``log`` means the binary logarithm and ``ln`` the natural one.  Both are
clamped to 1 on small arguments (``log(x) = 1`` for ``x <= 2``, ``ln(x) = 1``
for ``x <= e``) so that iterated logarithms stay positive.  Hidden
constants of the asymptotic statements are not modelled; the evaluators
return the bare expressions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .bitcore import ContractError


def log2_clamped(x: float) -> float:
    return 1.0 if x <= 2 else math.log2(x)


def ln_clamped(x: float) -> float:
    return 1.0 if x <= math.e else math.log(x)


@dataclass(frozen=True)
class SuccessProbModel:
    """Fitted stand-in for the absolute constant of the one-round success bound."""

    c_fit: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.c_fit <= 1.0:
            raise ContractError(f"c_fit must lie in (0, 1], got {self.c_fit}")


def _check_lambda(n: int, lam: int) -> None:
    if not 1 <= lam <= n:
        raise ContractError(f"lambda must lie in [1..n], got lambda={lam}, n={n}")


def runtime_bound(n: int, lam: int) -> float:
    """max{n log n / lam, n lam loglog(lam) / log(lam)}."""
    _check_lambda(n, lam)
    first = n * log2_clamped(n) / lam
    second = n * lam * log2_clamped(log2_clamped(lam)) / log2_clamped(lam)
    return max(first, second)


def old_runtime_bound(n: int, lam: int) -> float:
    """max{n log n / lam, lam n}, the earlier fitness-level bound."""
    _check_lambda(n, lam)
    return max(n * log2_clamped(n) / lam, lam * n)


def optimal_lambda(n: int) -> tuple[float, int]:
    """sqrt(log n * loglog n / logloglog n) and its rounding (at least 1)."""
    if n < 1:
        raise ContractError(f"n must be positive, got {n}")
    l1 = log2_clamped(n)
    l2 = log2_clamped(l1)
    l3 = log2_clamped(l2)
    value = math.sqrt(l1 * l2 / l3)
    return value, max(1, int(math.floor(value + 0.5)))


def success_prob_lower(n: int, d: int, lam: int, model: SuccessProbModel = SuccessProbModel()) -> float:
    """c_fit * (1 - ((n - d) / n) ** (lam**2 / 2)), for lam >= 2."""
    if lam < 2:
        raise ContractError("the one-round success bound assumes lambda >= 2")
    if not 0 <= d <= n:
        raise ContractError(f"distance must lie in [0..n], got {d}")
    return model.c_fit * (1.0 - ((n - d) / n) ** (lam * lam / 2.0))


def crossover_gain_threshold(lam: int, d_prime: float) -> int:
    """Fitness gain the best crossover child reaches with probability >= 1 - 1/e.

    floor(min{(ln(lam)/2 - 1) / (lnln(lam) + ln(d_prime)), lam / d_prime}),
    clamped below at 0.
    """
    if lam < 2:
        raise ContractError("lambda must be at least 2")
    if d_prime <= 0:
        raise ContractError(f"d_prime must be positive, got {d_prime}")
    denom = ln_clamped(ln_clamped(lam)) + math.log(d_prime)
    if denom <= 0:
        raise ContractError(f"d_prime={d_prime} too small: denominator {denom} <= 0")
    gamma = math.floor(min((0.5 * ln_clamped(lam) - 1.0) / denom, lam / d_prime))
    return max(0, gamma)


def chernoff_upper_strong(mu: float, delta: float) -> float:
    """(e^delta / (1+delta)^(1+delta))^mu bound on Pr[X >= (1+delta) mu]."""
    if mu < 0 or delta < 0:
        raise ContractError("mu and delta must be non-negative")
    return math.exp(mu * (delta - (1.0 + delta) * math.log1p(delta)))


def chernoff_upper(mu: float, delta: float) -> float:
    """exp(-delta^2 mu / 3) bound on Pr[X >= (1+delta) mu], delta in [0, 1]."""
    if mu < 0 or not 0.0 <= delta <= 1.0:
        raise ContractError("need mu >= 0 and delta in [0, 1]")
    return math.exp(-delta * delta * mu / 3.0)


def chernoff_lower(mu: float, delta: float) -> float:
    """exp(-delta^2 mu / 2) bound on Pr[X <= (1-delta) mu], delta in [0, 1]."""
    if mu < 0 or not 0.0 <= delta <= 1.0:
        raise ContractError("need mu >= 0 and delta in [0, 1]")
    return math.exp(-delta * delta * mu / 2.0)


def harmonic(n: int) -> float:
    if n < 0:
        raise ContractError("n must be non-negative")
    return math.fsum(1.0 / i for i in range(1, n + 1))


def geometric_sum_bounds(n: int, C: float, delta: float) -> tuple[float, float, float]:
    """For independent geometrics with p_i >= C i / n: the expectation bound
    (1/C) n H_n, the tail probability n^-delta and its threshold
    (1+delta) (1/C) n ln n."""
    if not 0.0 < C <= 1.0:
        raise ContractError(f"C must lie in (0, 1], got {C}")
    if delta <= 0:
        raise ContractError("delta must be positive")
    return n * harmonic(n) / C, float(n) ** (-delta), (1.0 + delta) * n * ln_clamped(n) / C


def runtime_tail_bound(n: int, lam: int, delta: float) -> float:
    """(n / lam^2)^-delta; an order-of-magnitude reference only."""
    _check_lambda(n, lam)
    if delta < 0:
        raise ContractError("delta must be non-negative")
    return (n / (lam * lam)) ** (-delta)


def additive_drift_time(initial_potential: float, drift_per_step: float) -> float:
    """Expected steps to exhaust ``initial_potential`` at constant drift."""
    if drift_per_step <= 0:
        raise ContractError("drift must be positive")
    if initial_potential < 0:
        raise ContractError("potential must be non-negative")
    return initial_potential / drift_per_step


def phase_one_boundary(n: int, lam: int, natural: bool = True) -> float:
    """Distance n loglog(lam) / log(lam) ending the fast-progress phase.

    Natural logarithms by default; ``natural=False`` gives the base-2 form.
    """
    _check_lambda(n, lam)
    if natural:
        return n * ln_clamped(ln_clamped(lam)) / ln_clamped(lam)
    return n * log2_clamped(log2_clamped(lam)) / log2_clamped(lam)
