"""Experiment orchestration: replications, lambda sweeps, drift and success
profiles, tail frequencies and the geometric-sum lemma check.

Every random stream is derived from ``(master_seed, index)`` with
:func:`llga.bitcore.derive_seed`, and results are collected by index, so the
outcome does not depend on the number of worker threads.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels as K
from . import oracle, theory
from .bitcore import BitString, ContractError, GaParams, RandomSource, derive_seed
from .engine import RunResult, run_until_distance, run_until_optimum
from .fitness import FitnessFunction

DEFAULT_BUDGET_FACTOR = 50.0

# stream families, kept apart so that experiments never share draws
_Z_STREAM = 0x7A7A_7A7A
_ZRUN_STREAM = 0x5EED_0002
_START_STREAM = 0x5EED_0003
_COUPON_STREAM = 0x5EED_0004


@dataclass
class ExperimentConfig:
    n_values: list[int]
    lambda_values: list[int] | str
    reps: int
    master_seed: int = 0
    budget_factor: float = DEFAULT_BUDGET_FACTOR
    output_path: str | None = None

    def __post_init__(self):
        if self.reps < 1:
            raise ContractError("reps must be >= 1")
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise ContractError("all n must be >= 1")
        if self.lambda_values != "auto":
            for n in self.n_values:
                for lam in self.lambda_values:
                    if not 1 <= lam <= n:
                        raise ContractError(f"lambda={lam} outside [1..{n}]")

    def lambdas_for(self, n: int) -> list[int]:
        if self.lambda_values == "auto":
            return [theory.optimal_lambda(n)[1]]
        return list(self.lambda_values)


@dataclass(frozen=True)
class RunStatistics:
    mean: float
    std_err: float
    median: float
    q05: float
    q95: float
    censored_count: int
    reps: int

    @property
    def all_censored(self) -> bool:
        return self.censored_count == self.reps


def nearest_rank(sorted_values: np.ndarray, q: float) -> float:
    """Nearest-rank quantile of an ascending array."""
    k = max(1, math.ceil(q * sorted_values.size))
    return float(sorted_values[k - 1])


def summarize(values: Sequence[float], censored: Sequence[bool] | None = None) -> RunStatistics:
    """Statistics over the uncensored values; censored ones are only counted."""
    values = np.asarray(values, dtype=float)
    mask = np.zeros(values.size, bool) if censored is None else np.asarray(censored, bool)
    kept = np.sort(values[~mask])
    reps = int(values.size)
    n_cens = int(mask.sum())
    if kept.size == 0:
        nan = float("nan")
        return RunStatistics(nan, nan, nan, nan, nan, n_cens, reps)
    se = float(kept.std(ddof=1) / math.sqrt(kept.size)) if kept.size > 1 else 0.0
    return RunStatistics(
        mean=float(kept.mean()),
        std_err=se,
        median=nearest_rank(kept, 0.5),
        q05=nearest_rank(kept, 0.05),
        q95=nearest_rank(kept, 0.95),
        censored_count=n_cens,
        reps=reps,
    )


def default_budget(n: int, lam: int, budget_factor: float = DEFAULT_BUDGET_FACTOR) -> int:
    return max(1, math.ceil(budget_factor * theory.runtime_bound(n, lam)))


def _pmap(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def replicate(
    n: int,
    lam: int,
    reps: int,
    master_seed: int,
    budget: int | None = None,
    budget_factor: float = DEFAULT_BUDGET_FACTOR,
    threads: int = 1,
    random_target: bool = False,
) -> list[RunResult]:
    """``reps`` independent runs; run ``i`` uses seed ``derive_seed(master_seed, i)``.

    With ``random_target`` each run optimises OM_z for its own uniformly
    random ``z`` (drawn from a separate stream).
    """
    if reps < 1:
        raise ContractError("reps must be >= 1")
    params = GaParams(n, lam)
    budget = default_budget(n, lam, budget_factor) if budget is None else budget
    onemax = FitnessFunction.onemax(n)

    def one(i: int) -> RunResult:
        if random_target:
            z = RandomSource(derive_seed(master_seed ^ _Z_STREAM, i)).random_bits(n)
            f = FitnessFunction.generalized(z)
        else:
            f = onemax
        return run_until_optimum(params, f, derive_seed(master_seed, i), budget)[0]

    return _pmap(one, range(reps), threads)


def run_replications(
    n: int,
    lam: int,
    reps: int,
    master_seed: int,
    budget: int | None = None,
    budget_factor: float = DEFAULT_BUDGET_FACTOR,
    threads: int = 1,
) -> RunStatistics:
    """Empirical optimisation-time statistics of ``reps`` runs."""
    runs = replicate(n, lam, reps, master_seed, budget, budget_factor, threads)
    stats = summarize([r.evaluations for r in runs], [r.censored for r in runs])
    if stats.all_censored:
        warnings.warn(f"all {reps} runs censored at n={n}, lambda={lam}", RuntimeWarning)
    return stats


@dataclass(frozen=True)
class SweepResult:
    n: int
    rows: list[tuple[int, RunStatistics]]
    argmin: int


def lambda_sweep(
    n: int,
    lambda_values: Sequence[int],
    reps: int,
    master_seed: int,
    budget_factor: float = DEFAULT_BUDGET_FACTOR,
    threads: int = 1,
    progress: Callable[[str], None] | None = None,
) -> SweepResult:
    """One statistics row per lambda; argmin by mean, ties to the smaller lambda.

    All cells reuse the same per-run seeds (common random numbers).
    """
    rows = []
    for lam in lambda_values:
        st = run_replications(n, lam, reps, master_seed, None, budget_factor, threads)
        rows.append((lam, st))
        if progress:
            progress(f"sweep n={n} lambda={lam}: mean={st.mean:.1f} se={st.std_err:.1f}")
    finite = [(st.mean, lam) for lam, st in rows if not math.isnan(st.mean)]
    if not finite:
        raise ContractError("every sweep cell was fully censored")
    argmin = min(finite)[1]
    return SweepResult(n, rows, argmin)


def sample_iterations(
    n: int,
    lam: int,
    d: int,
    samples: int,
    seed: int,
) -> np.ndarray:
    """Single rounds from fresh points at distance ``d`` on OneMax.

    Columns: ell, good bits of the mutation winner, best-mutant gain,
    best-crossover gain before selection, accepted fitness gain.
    """
    if not 1 <= d <= n:
        raise ContractError(f"distance must lie in [1..n], got {d}")
    params = GaParams(n, lam)
    out = np.empty((samples, 5), dtype=np.int64)
    K.sample_iterations(n, d, lam, params.p, params.c, RandomSource(seed).generator, samples, out)
    return out


@dataclass(frozen=True)
class DriftBin:
    d: int
    samples: int
    mean_gain: float
    se_gain: float
    mean_good_bits: float
    mean_ell: float
    sparse: bool


@dataclass(frozen=True)
class DriftProfile:
    n: int
    lam: int
    bins: list[DriftBin] = field(default_factory=list)

    def mean_gain(self) -> float:
        return float(np.mean([b.mean_gain for b in self.bins]))


def _se(x: np.ndarray) -> float:
    return float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0


def drift_profile(
    n: int,
    lam: int,
    distance_targets: Sequence[int],
    samples_per_target: int,
    master_seed: int,
    min_samples: int = 30,
    threads: int = 1,
) -> DriftProfile:
    """Mean one-round fitness gain (after selection) at each target distance."""

    def one(i: int) -> DriftBin:
        d = distance_targets[i]
        s = sample_iterations(n, lam, d, samples_per_target, derive_seed(master_seed, i))
        gain = s[:, 4].astype(float)
        return DriftBin(
            d=int(d),
            samples=samples_per_target,
            mean_gain=float(gain.mean()),
            se_gain=_se(gain),
            mean_good_bits=float(s[:, 1].mean()),
            mean_ell=float(s[:, 0].mean()),
            sparse=samples_per_target < min_samples,
        )

    return DriftProfile(n, lam, _pmap(one, range(len(distance_targets)), threads))


@dataclass(frozen=True)
class SuccessRow:
    d: int
    samples: int
    freq_improve: float
    implied_c: float


def success_probability(
    n: int,
    lam: int,
    distance_targets: Sequence[int],
    samples_per_target: int,
    master_seed: int,
    threads: int = 1,
) -> list[SuccessRow]:
    """Frequency of a strict improvement in one round, and the constant it implies
    in the bound c * (1 - ((n-d)/n)^(lam^2/2))."""

    def one(i: int) -> SuccessRow:
        d = distance_targets[i]
        s = sample_iterations(n, lam, d, samples_per_target, derive_seed(master_seed, i))
        freq = float(np.mean(s[:, 4] > 0))
        if lam >= 2:
            implied = freq / theory.success_prob_lower(n, d, lam)
        else:
            implied = float("nan")
        return SuccessRow(int(d), samples_per_target, freq, implied)

    return _pmap(one, range(len(distance_targets)), threads)


def mutation_concentration(
    n: int, lam: int, d: int, eps: float, samples: int, seed: int
) -> float:
    """Frequency of |ell - lam| <= eps*lam together with |B'| >= (1-eps)*lam*d/n."""
    s = sample_iterations(n, lam, d, samples, seed)
    ok = (np.abs(s[:, 0] - lam) <= eps * lam) & (s[:, 1] >= (1.0 - eps) * lam * d / n)
    return float(ok.mean())


def construct_pair(n: int, d: int, ell: int, good: int, rng: RandomSource) -> tuple[BitString, BitString]:
    """A point ``x`` at distance ``d`` and ``x'`` at Hamming distance ``ell``
    from it, exactly ``good`` of the differing positions being 0 in ``x``."""
    if not (0 <= good <= min(d, ell) and ell - good <= n - d):
        raise ContractError("infeasible (d, ell, good) combination")
    perm = rng.generator.permutation(n)
    zeros, ones = perm[:d], perm[d:]
    x = np.ones(n, np.uint8)
    x[zeros] = 0
    xp = x.copy()
    xp[zeros[:good]] = 1
    xp[ones[: ell - good]] = 0
    return BitString(x), BitString(xp)


def crossover_gain_trials(
    x: BitString, xp: BitString, lam: int, trials: int, seed: int, c: float | None = None
) -> np.ndarray:
    """Best-of-``lam`` crossover gain Om(y) - Om(x) over repeated crossover phases."""
    if x.n != xp.n:
        raise ContractError("length mismatch")
    c = 1.0 / lam if c is None else c
    pos = np.flatnonzero(x.bits != xp.bits).astype(np.int64)
    out = np.empty(trials, dtype=np.int64)
    K.crossover_trials(x.bits.copy(), np.ones(x.n, np.uint8), pos, pos.size, lam, c,
                       RandomSource(seed).generator, trials, out)
    return out


@dataclass(frozen=True)
class DriftConsistency:
    d_start: int
    d_stop: int
    mean_drift: float
    predicted_iterations: float
    observed_iterations: float
    observed_se: float

    @property
    def ratio(self) -> float:
        return self.predicted_iterations / self.observed_iterations


def drift_consistency(
    n: int,
    lam: int,
    d_start: int,
    d_stop: int,
    reps: int,
    samples_per_target: int,
    master_seed: int,
    n_targets: int = 8,
    threads: int = 1,
) -> DriftConsistency:
    """Compare (d_start - d_stop) / measured drift with observed crossing times."""
    if not 1 <= d_stop < d_start <= n:
        raise ContractError("need 1 <= d_stop < d_start <= n")
    targets = sorted({int(round(v)) for v in np.linspace(d_stop, d_start, n_targets)})
    profile = drift_profile(n, lam, targets, samples_per_target, master_seed, threads=threads)
    drift = profile.mean_gain()
    predicted = theory.additive_drift_time(d_start - d_stop, drift)

    params = GaParams(n, lam)
    budget = 10 * default_budget(n, lam)

    def one(i: int) -> int:
        rng = RandomSource(derive_seed(master_seed ^ _START_STREAM, i))
        x = np.ones(n, np.uint8)
        x[rng.generator.choice(n, size=d_start, replace=False)] = 0
        res = run_until_distance(params, BitString(x), d_stop, derive_seed(master_seed ^ _ZRUN_STREAM, i), budget)
        return res.iterations

    its = np.asarray(_pmap(one, range(reps), threads), dtype=float)
    return DriftConsistency(d_start, d_stop, drift, predicted, float(its.mean()), _se(its))


@dataclass(frozen=True)
class TailRow:
    delta: float
    threshold: float
    freq_exceed: float
    reference_bound: float


@dataclass(frozen=True)
class TailReport:
    stats: RunStatistics
    rows: list[TailRow]


def tail_estimate(
    n: int,
    lam: int,
    reps: int,
    deltas: Sequence[float],
    master_seed: int,
    budget_factor: float = DEFAULT_BUDGET_FACTOR,
    threads: int = 1,
) -> TailReport:
    """Empirical Pr[T >= (1+delta) * mean T] next to (n/lam^2)^-delta.

    Censored runs count as exceedances whenever the budget reaches the threshold.
    """
    runs = replicate(n, lam, reps, master_seed, None, budget_factor, threads)
    evals = np.array([r.evaluations for r in runs], dtype=float)
    st = summarize(evals, [r.censored for r in runs])
    rows = []
    for delta in deltas:
        thr = (1.0 + delta) * st.mean
        rows.append(TailRow(float(delta), thr, float(np.mean(evals >= thr)),
                            theory.runtime_tail_bound(n, lam, delta)))
    return TailReport(st, rows)


@dataclass(frozen=True)
class GeometricSumRow:
    delta: float
    threshold: float
    freq: float
    bound: float


@dataclass(frozen=True)
class GeometricSumReport:
    n: int
    C: float
    reps: int
    mean: float
    std_err: float
    harmonic_bound: float
    rows: list[GeometricSumRow]
    geometric_moments: tuple[float, float]
    coupon_moments: tuple[float, float]


def lemma41_check(
    n: int,
    C: float,
    reps: int,
    deltas: Sequence[float],
    master_seed: int,
    coupon_reps: int | None = None,
) -> GeometricSumReport:
    """Sums of geometrics with p_i = C i / n against (1/C) n H_n and the
    n^-delta tail bound, plus the moments of the matching coupon collector."""
    probs = C * np.arange(1, n + 1) / n
    sums = oracle.sample_geometric_sums(probs, reps, RandomSource(derive_seed(master_seed, 0)))
    coupons = oracle.sample_coupon_collector(
        n, C, RandomSource(derive_seed(master_seed ^ _COUPON_STREAM, 0)),
        reps=reps if coupon_reps is None else coupon_reps)
    rows = []
    for delta in deltas:
        _, bound, thr = theory.geometric_sum_bounds(n, C, delta)
        rows.append(GeometricSumRow(float(delta), thr, float(np.mean(sums >= thr)), bound))
    s = sums.astype(float)
    cc = coupons.astype(float)
    return GeometricSumReport(
        n=n, C=C, reps=reps,
        mean=float(s.mean()),
        std_err=_se(s),
        harmonic_bound=n * theory.harmonic(n) / C,
        rows=rows,
        geometric_moments=(float(s.mean()), float(np.mean(s * s))),
        coupon_moments=(float(cc.mean()), float(np.mean(cc * cc))),
    )


@dataclass(frozen=True)
class UnbiasednessReport:
    onemax: RunStatistics
    generalized: RunStatistics

    @property
    def z_score(self) -> float:
        se = math.hypot(self.onemax.std_err, self.generalized.std_err)
        return (self.generalized.mean - self.onemax.mean) / se


def unbiasedness(
    n: int,
    lam: int,
    reps: int,
    master_seed: int,
    budget_factor: float = DEFAULT_BUDGET_FACTOR,
    threads: int = 1,
) -> UnbiasednessReport:
    """OneMax against OM_z with a fresh random ``z`` per run, on disjoint streams."""
    a = replicate(n, lam, reps, master_seed, None, budget_factor, threads)
    b = replicate(n, lam, reps, derive_seed(master_seed, 1 << 40), None, budget_factor,
                  threads, random_target=True)
    return UnbiasednessReport(
        summarize([r.evaluations for r in a], [r.censored for r in a]),
        summarize([r.evaluations for r in b], [r.censored for r in b]),
    )
