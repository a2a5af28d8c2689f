"""The (1+(lambda,lambda)) GA main loop with per-iteration traces.

Optimisation time is the evaluation count at which an optimal point is
evaluated for the first time.  This includes the evaluation of the random
initial point and may fall inside a mutation or crossover phase, in which
case the run ends there and the partial round counts as an iteration.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .bitcore import (
    BitString,
    ContractError,
    GaParams,
    RandomSource,
    crossover,
    mutate,
    sample_ell,
    select_best,
)
from .fitness import EvaluationCounter, FitnessFunction, evaluate


@dataclass(frozen=True)
class IterationTrace:
    ell: int
    best_mutant_gain: int
    good_bits: int
    crossover_gain: int
    accepted: bool
    distance_before: int
    distance_after: int
    evaluations: int

    @classmethod
    def from_row(cls, row) -> "IterationTrace":
        return cls(
            ell=int(row[K.T_ELL]),
            best_mutant_gain=int(row[K.T_MUT_GAIN]),
            good_bits=int(row[K.T_GOOD]),
            crossover_gain=int(row[K.T_CROSS_GAIN]),
            accepted=bool(row[K.T_ACCEPTED]),
            distance_before=int(row[K.T_D_BEFORE]),
            distance_after=int(row[K.T_D_AFTER]),
            evaluations=int(row[K.T_EVALS]),
        )


@dataclass(frozen=True)
class RunResult:
    evaluations: int
    iterations: int
    seed: int
    censored: bool
    final_distance: int


def _check(x: BitString, params: GaParams, f: FitnessFunction) -> None:
    if x.n != params.n or f.n != params.n:
        raise ContractError(f"length mismatch: x.n={x.n}, params.n={params.n}, f.n={f.n}")


def run_iteration(
    x: BitString,
    params: GaParams,
    f: FitnessFunction,
    counter: EvaluationCounter,
    rng: RandomSource,
) -> tuple[BitString, IterationTrace]:
    """Execute one complete round (2*lambda evaluations) from ``x``."""
    _check(x, params, f)
    n, lam = params.n, params.lam
    xs = x.bits.copy()
    z = f.target_array()
    fx = f.n - int(np.count_nonzero(xs != z))
    bufs = [np.empty(n, np.int64) for _ in range(4)]
    mark = np.zeros(n, np.uint8)
    _, ev, first_hit, ell, bm, by, acc, fx_new = K.iteration(
        xs, z, fx, n, lam, params.p, params.c, rng.generator, False, 2 * lam + 1, *bufs, mark)
    if first_hit > 0 and counter.first_optimum_at is None:
        counter.first_optimum_at = counter.count + first_hit
    counter.count += ev
    trace = IterationTrace(
        ell=int(ell),
        best_mutant_gain=int(bm - fx),
        good_bits=int((bm - fx + ell) // 2),
        crossover_gain=int(by - fx),
        accepted=bool(acc),
        distance_before=n - fx,
        distance_after=n - int(fx_new),
        evaluations=int(ev),
    )
    return BitString(xs), trace


def reference_iteration(
    x: BitString,
    params: GaParams,
    f: FitnessFunction,
    counter: EvaluationCounter,
    rng: RandomSource,
) -> BitString:
    """Literal transcription of one round built from the public operators.

    Slow; kept as an independent check on the compiled round.
    """
    _check(x, params, f)
    fx = f.value(x)
    ell = sample_ell(rng, params.n, params.p)
    mutants = [mutate(x, ell, rng) for _ in range(params.lam)]
    mvals = [evaluate(f, m, counter) for m in mutants]
    xp = mutants[select_best(mutants, mvals, rng)]
    kids = [crossover(x, xp, params.c, rng) for _ in range(params.lam)]
    kvals = [evaluate(f, y, counter) for y in kids]
    best = select_best(kids, kvals, rng)
    return kids[best] if kvals[best] >= fx else x


def run_until_optimum(
    params: GaParams,
    f: FitnessFunction,
    seed: int,
    budget: int,
    trace: bool = False,
    start: BitString | None = None,
) -> tuple[RunResult, list[IterationTrace]]:
    """One run from a uniformly random point (or ``start``) until the optimum
    is first evaluated or ``budget`` evaluations are spent."""
    if budget < 1:
        raise ContractError(f"budget must be >= 1, got {budget}")
    if f.n != params.n:
        raise ContractError("fitness function and parameters disagree on n")
    rng = RandomSource(seed)
    if start is None:
        xs = rng.generator.integers(0, 2, size=params.n, dtype=np.uint8)
    else:
        if start.n != params.n:
            raise ContractError("start point has the wrong length")
        xs = start.bits.copy()
    status, evals, iters, final_d, rows = K.run(
        xs, f.target_array(), params.n, params.lam, params.p, params.c,
        rng.generator, int(budget), 0, trace)
    result = RunResult(
        evaluations=int(evals),
        iterations=int(iters),
        seed=seed,
        censored=status != K.HIT,
        final_distance=int(final_d),
    )
    traces = [IterationTrace.from_row(r) for r in rows] if trace else []
    return result, traces


def run_until_distance(
    params: GaParams,
    start: BitString,
    target_distance: int,
    seed: int,
    budget: int,
) -> RunResult:
    """Iterate on OneMax from ``start`` until the accepted point is within
    ``target_distance`` of the optimum (``target_distance >= 1``)."""
    if target_distance < 1:
        raise ContractError("use run_until_optimum for target distance 0")
    rng = RandomSource(seed)
    status, evals, iters, final_d, _ = K.run(
        start.bits.copy(), np.ones(params.n, np.uint8), params.n, params.lam,
        params.p, params.c, rng.generator, int(budget), int(target_distance), False)
    return RunResult(int(evals), int(iters), seed, status == K.EXHAUSTED, int(final_d))
