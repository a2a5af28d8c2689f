"""Exact ground truth for small instances, plus the geometric-sum and
coupon-collector samplers.

On OneMax the GA's fitness distance is itself a Markov chain: a round from
distance ``d`` only depends on how many of the ``ell`` flips hit wrong bits
(hypergeometric), the winning mutant is the one with the most such hits, and
each crossover child takes Binomial(b, c) good and Binomial(ell - b, c) bad
flips independently of its siblings.  Maxima of ``lam`` i.i.d. draws are
obtained by raising the CDF to the power ``lam``.  Nothing is sampled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _kernels as K
from .bitcore import ContractError, RandomSource

DEFAULT_N_MAX = 64


class OracleSizeError(ValueError):
    """Instance too large for the exact kernel; use the simulator instead."""


class NonConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class TransitionKernel:
    n: int
    lam: int
    p: float
    c: float
    rows: np.ndarray  # rows[d, d'] = P(next distance d' | distance d)
    # P(next distance d' and no optimal point evaluated during the round | d)
    live_rows: np.ndarray
    # E[evaluations of the round left unused because an optimum was evaluated ; | d]
    hit_waste: np.ndarray


@dataclass(frozen=True)
class HittingTimes:
    expected_iterations: np.ndarray
    expected_evaluations_total: float
    expected_evaluations_exact: float


class _Kahan:
    """Compensated running sum of equal-shape arrays."""

    def __init__(self, shape):
        self.total = np.zeros(shape)
        self._comp = np.zeros(shape)

    def add(self, v):
        y = v - self._comp
        t = self.total + y
        self._comp = (t - self.total) - y
        self.total = t


def _max_of_iid(pmf: np.ndarray, lam: int) -> np.ndarray:
    cdf = np.minimum(np.cumsum(pmf), 1.0) ** lam
    return np.diff(cdf, prepend=0.0)


def _best_gain_pmf(ell: int, b: int, c: float, lam: int) -> np.ndarray:
    """PMF of the best of ``lam`` crossover gains, indexed by gain + (ell - b)."""
    good = stats.binom.pmf(np.arange(b + 1), b, c)
    bad = stats.binom.pmf(np.arange(ell - b + 1), ell - b, c)
    # gain = G - B; index i of the convolution with reversed bad <-> gain i - (ell - b)
    single = np.convolve(good, bad[::-1])
    return _max_of_iid(single, lam)


def _first_success_waste(q: float, lam: int) -> float:
    """E[(lam - J) ; J <= lam] for J geometric with success probability q."""
    if q <= 0.0:
        return 0.0
    j = np.arange(1, lam + 1)
    return float(np.sum((1.0 - q) ** (j - 1) * q * (lam - j)))


def build_kernel(
    n: int,
    lam: int,
    p: float | None = None,
    c: float | None = None,
    n_max: int = DEFAULT_N_MAX,
) -> TransitionKernel:
    """Exact distance transition matrix of one round of the GA on OneMax."""
    if n > n_max:
        raise OracleSizeError(
            f"n={n} exceeds the exact-oracle limit n_max={n_max}; use the simulator")
    if not 1 <= lam <= n:
        raise ContractError(f"lambda must lie in [1..n], got {lam}")
    p = lam / n if p is None else p
    c = 1.0 / lam if c is None else c

    ell_pmf = stats.binom.pmf(np.arange(n + 1), n, p)
    acc = _Kahan((n + 1, n + 1))
    acc_live = _Kahan((n + 1, n + 1))
    waste = np.zeros(n + 1)

    for ell in range(n + 1):
        w = ell_pmf[ell]
        if w == 0.0:
            continue
        gains = [_best_gain_pmf(ell, b, c, lam) for b in range(ell + 1)]
        contrib = np.zeros((n + 1, n + 1))
        live = np.zeros((n + 1, n + 1))
        contrib[0, 0] = 1.0
        for d in range(1, n + 1):
            b_lo, b_hi = max(0, ell - (n - d)), min(ell, d)
            bs = np.arange(b_lo, b_hi + 1)
            hyp = stats.hypergeom.pmf(bs, n, d, ell)
            bstar = _max_of_iid(hyp, lam)
            for b, pb in zip(bs, bstar):
                if pb == 0.0:
                    continue
                g = gains[b]
                offset = ell - b
                row = np.zeros(d + 1)
                # negative gains are rejected: distance stays d
                row[d] = g[:offset].sum()
                row[d - np.arange(b + 1)] += g[offset:offset + b + 1]
                contrib[d, :d + 1] += pb * row
                if b == d == ell:
                    continue  # an optimal mutant was evaluated
                row[0] = 0.0  # reaching distance 0 means an optimal child was evaluated
                live[d, :d + 1] += pb * row
            # expected evaluations left unused when the optimum turns up mid-round
            if ell == d:
                q = 1.0 / math.comb(n, d)
                hit = 1.0 - (1.0 - q) ** lam
                # a hit at mutant i leaves 2*lam - i evaluations unused
                waste[d] += w * (lam * hit + _first_success_waste(q, lam))
            elif ell > d and b_hi == d:
                s = c ** d * (1.0 - c) ** (ell - d)
                waste[d] += w * bstar[-1] * _first_success_waste(s, lam)
        acc.add(w * contrib)
        acc_live.add(w * live)

    rows = acc.total
    live_rows = acc_live.total
    return TransitionKernel(n, lam, p, c, rows, live_rows, waste)


def expected_times(kernel: TransitionKernel) -> HittingTimes:
    """Expected rounds to the optimum from each distance, and expected
    optimisation time from a uniformly random start."""
    P = kernel.rows
    n, lam = kernel.n, kernel.lam
    e_iter = np.zeros(n + 1)
    for d in range(1, n + 1):
        stay = P[d, d]
        if stay >= 1.0:
            raise NonConvergenceError(f"distance {d} is absorbing")
        e_iter[d] = (1.0 + math.fsum(P[d, :d] * e_iter[:d])) / (1.0 - stay)
    start = stats.binom.pmf(np.arange(n + 1), n, 0.5)
    mean_iters = math.fsum(start * e_iter)
    total = 1.0 + 2 * lam * mean_iters

    # stop at the first optimal evaluation: R(d) = expected evaluations from d
    L = kernel.live_rows
    r = np.zeros(n + 1)
    for d in range(1, n + 1):
        used = 2 * lam - kernel.hit_waste[d]
        r[d] = (used + math.fsum(L[d, 1:d] * r[1:d])) / (1.0 - L[d, d])
    exact = 1.0 + math.fsum(start * r)
    return HittingTimes(e_iter, total, exact)


def sample_geometric_sum(success_probs, rng: RandomSource) -> int:
    """One draw of a sum of independent geometrics supported on {1, 2, ...}."""
    probs = np.asarray(success_probs, dtype=float)
    if np.any(probs <= 0.0) or np.any(probs > 1.0):
        raise ContractError("success probabilities must lie in (0, 1]")
    return int(rng.generator.geometric(probs).sum())


def sample_geometric_sums(success_probs, reps: int, rng: RandomSource, chunk: int = 1 << 20) -> np.ndarray:
    """``reps`` independent draws of :func:`sample_geometric_sum`, vectorised."""
    probs = np.asarray(success_probs, dtype=float)
    if np.any(probs <= 0.0) or np.any(probs > 1.0):
        raise ContractError("success probabilities must lie in (0, 1]")
    out = np.empty(reps, dtype=np.int64)
    rows = max(1, chunk // max(1, probs.size))
    for lo in range(0, reps, rows):
        hi = min(reps, lo + rows)
        out[lo:hi] = rng.generator.geometric(probs, size=(hi - lo, probs.size)).sum(axis=1)
    return out


def sample_coupon_collector(n: int, C: float, rng: RandomSource, reps: int | None = None):
    """Rounds until all ``n`` types are collected (one draw, or an array of ``reps``)."""
    if not 0.0 < C <= 1.0:
        raise ContractError(f"C must lie in (0, 1], got {C}")
    out = np.empty(1 if reps is None else reps, dtype=np.int64)
    K.coupon_rounds(n, C, rng.generator, out.size, out)
    return int(out[0]) if reps is None else out


def kernel_csv_rows(kernel: TransitionKernel):
    for d in range(kernel.n + 1):
        yield [d, *kernel.rows[d]]
