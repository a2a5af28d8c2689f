"""Compiled simulation core.

Everything here works on raw uint8 arrays and a numpy ``Generator`` that is
shared with the Python side, so a run is replayable from its seed whether it
is driven from Python one iteration at a time or entirely inside the
compiled loop.

Operator realisations (exact in distribution, cheaper than the literal form):

* ``mut_ell`` picks its ``ell`` distinct positions with Floyd's subset
  sampler.
* ``cross_c(x, x')`` only matters on the ``ell`` positions where ``x`` and
  ``x'`` differ.  The number taken from ``x'`` is Binomial(ell, c) and the
  taken set is a uniform subset of that size, which is the same law as
  independent per-position coins.
* Ties among maximisers are resolved by reservoir sampling (replace the
  incumbent with probability 1/k at the k-th tie), giving a uniform choice.

Uniform integers are ``floor(m * U)`` with ``U`` a 53-bit double; the bias
is below ``m / 2**53``.
"""
from __future__ import annotations

import numba as nb
import numpy as np

_jit = nb.njit(nogil=True, cache=True)

# status codes returned by the iteration / run kernels
COMPLETE = 0
HIT = 1
EXHAUSTED = 2

# trace column layout
T_ELL, T_MUT_GAIN, T_GOOD, T_CROSS_GAIN, T_ACCEPTED, T_D_BEFORE, T_D_AFTER, T_EVALS = range(8)
TRACE_COLS = 8


@_jit
def _randbelow(gen, m):
    return np.int64(gen.random() * m)


@_jit
def sample_subset(gen, m, k, out, mark):
    """Floyd's algorithm: ``out[:k]`` becomes a uniform k-subset of [0, m).

    ``mark`` must be all-zero on entry over [0, m); it is restored on exit.
    """
    cnt = 0
    for j in range(m - k, m):
        t = _randbelow(gen, j + 1)
        if mark[t]:
            t = j
        mark[t] = 1
        out[cnt] = t
        cnt += 1
    for i in range(k):
        mark[out[i]] = 0


@_jit
def agreement(x, z):
    s = 0
    for i in range(x.size):
        if x[i] == z[i]:
            s += 1
    return s


@_jit
def crossover_phase(x, z, fx, n, lam, c, ell, pos, gen, stop_at_optimum,
                    evals, evals_left, first_hit, idx_cur, idx_best, mark):
    """Create ``lam`` offspring of cross_c(x, x'), where x' = x with ``pos[:ell]`` flipped.

    Returns ``(status, evals, first_hit, best_fitness, k_best)``; the taken
    indices of the winner (into ``pos``) are left in ``idx_best[:k_best]``.
    """
    best_f = -1
    ties = 0
    k_best = 0
    for _ in range(lam):
        k = gen.binomial(ell, c) if ell > 0 else 0
        sample_subset(gen, ell, k, idx_cur, mark)
        f = fx
        for t in range(k):
            q = pos[idx_cur[t]]
            if x[q] != z[q]:
                f += 1
            else:
                f -= 1
        evals += 1
        if f == n and first_hit < 0:
            first_hit = evals
            if stop_at_optimum:
                return HIT, evals, first_hit, f, k_best
        if f > best_f:
            best_f = f
            ties = 1
            k_best = k
            for t in range(k):
                idx_best[t] = idx_cur[t]
        elif f == best_f:
            ties += 1
            if gen.random() * ties < 1.0:
                k_best = k
                for t in range(k):
                    idx_best[t] = idx_cur[t]
        if evals == evals_left:
            return EXHAUSTED, evals, first_hit, best_f, k_best
    return COMPLETE, evals, first_hit, best_f, k_best


@_jit
def iteration(x, z, fx, n, lam, p, c, gen, stop_at_optimum, evals_left,
              pos_cur, pos_best, idx_cur, idx_best, mark):
    """One mutation + crossover + selection round, mutating ``x`` in place on acceptance.

    Returns ``(status, evals, first_hit, ell, best_mutant_fitness,
    best_offspring_fitness, accepted, new_fx)``.  ``first_hit`` is the
    1-based index within the round of the first optimal evaluation, or -1.
    With ``stop_at_optimum`` the round is abandoned at that evaluation; the
    reported fitness values then describe the optimal point just found.
    """
    evals = 0
    first_hit = -1
    ell = gen.binomial(n, p)

    best_f = -1
    ties = 0
    for _ in range(lam):
        sample_subset(gen, n, ell, pos_cur, mark)
        f = fx
        for t in range(ell):
            q = pos_cur[t]
            if x[q] != z[q]:
                f += 1
            else:
                f -= 1
        evals += 1
        if f == n and first_hit < 0:
            first_hit = evals
            if stop_at_optimum:
                return HIT, evals, first_hit, ell, n, n, True, n
        if f > best_f:
            best_f = f
            ties = 1
            for t in range(ell):
                pos_best[t] = pos_cur[t]
        elif f == best_f:
            ties += 1
            if gen.random() * ties < 1.0:
                for t in range(ell):
                    pos_best[t] = pos_cur[t]
        if evals == evals_left:
            return EXHAUSTED, evals, first_hit, ell, best_f, -1, False, fx

    status, evals, first_hit, best_y, k_best = crossover_phase(
        x, z, fx, n, lam, c, ell, pos_best, gen, stop_at_optimum,
        evals, evals_left, first_hit, idx_cur, idx_best, mark)
    if status == HIT:
        return HIT, evals, first_hit, ell, best_f, n, True, n
    if status == EXHAUSTED:
        return EXHAUSTED, evals, first_hit, ell, best_f, best_y, False, fx

    accepted = best_y >= fx
    if accepted:
        for t in range(k_best):
            q = pos_best[idx_best[t]]
            x[q] ^= 1
        fx = best_y
    return COMPLETE, evals, first_hit, ell, best_f, best_y, accepted, fx


@_jit
def run(x, z, n, lam, p, c, gen, budget, stop_distance, record):
    """Iterate from ``x`` (already drawn, not yet evaluated).

    ``stop_distance == 0``: stop at the first evaluation of an optimum
    (the optimisation-time convention).  ``stop_distance > 0``: stop after
    the first selection step that leaves ``x`` within that distance.

    Returns ``(status, evaluations, iterations, final_distance, trace)``.
    """
    cap = 64 if record else 1
    trace = np.zeros((cap, TRACE_COLS), np.int64)
    ntr = 0
    pos_cur = np.empty(n, np.int64)
    pos_best = np.empty(n, np.int64)
    idx_cur = np.empty(n, np.int64)
    idx_best = np.empty(n, np.int64)
    mark = np.zeros(n, np.uint8)

    fx = agreement(x, z)
    evals = 1
    iters = 0
    if fx == n:
        return HIT, evals, iters, 0, trace[:0]
    if stop_distance > 0 and n - fx <= stop_distance:
        return COMPLETE, evals, iters, n - fx, trace[:0]
    stop_at_optimum = stop_distance == 0

    while True:
        if evals >= budget:
            return EXHAUSTED, evals, iters, n - fx, trace[:ntr]
        d_before = n - fx
        status, ev, first_hit, ell, bm, by, acc, fx_new = iteration(
            x, z, fx, n, lam, p, c, gen, stop_at_optimum, budget - evals,
            pos_cur, pos_best, idx_cur, idx_best, mark)
        iters += 1
        evals += ev
        if status == EXHAUSTED:
            return EXHAUSTED, evals, iters, d_before, trace[:ntr]
        if record:
            if ntr == trace.shape[0]:
                grown = np.zeros((2 * ntr, TRACE_COLS), np.int64)
                grown[:ntr] = trace
                trace = grown
            row = trace[ntr]
            row[T_ELL] = ell
            row[T_MUT_GAIN] = bm - fx
            row[T_GOOD] = (bm - fx + ell) // 2
            row[T_CROSS_GAIN] = by - fx
            row[T_ACCEPTED] = 1 if acc else 0
            row[T_D_BEFORE] = d_before
            row[T_D_AFTER] = n - fx_new
            row[T_EVALS] = ev
            ntr += 1
        fx = fx_new
        if status == HIT:
            return HIT, evals, iters, 0, trace[:ntr]
        if stop_distance > 0 and n - fx <= stop_distance:
            return COMPLETE, evals, iters, n - fx, trace[:ntr]


@_jit
def sample_iterations(n, d, lam, p, c, gen, samples, out):
    """Run ``samples`` independent rounds on OneMax, each from a fresh point with
    exactly ``d`` zeros at uniformly random positions.

    ``out[s]`` receives ``(ell, good_bits, mutant_gain, crossover_gain, gain)``
    where ``gain`` is the fitness change after selection.
    """
    x = np.ones(n, np.uint8)
    z = np.ones(n, np.uint8)
    pos_cur = np.empty(n, np.int64)
    pos_best = np.empty(n, np.int64)
    idx_cur = np.empty(n, np.int64)
    idx_best = np.empty(n, np.int64)
    mark = np.zeros(n, np.uint8)
    fx = n - d
    big = 2 * lam + 1
    for s in range(samples):
        x[:] = 1
        sample_subset(gen, n, d, pos_cur, mark)
        for t in range(d):
            x[pos_cur[t]] = 0
        _, _, _, ell, bm, by, acc, fx_new = iteration(
            x, z, fx, n, lam, p, c, gen, False, big,
            pos_cur, pos_best, idx_cur, idx_best, mark)
        out[s, 0] = ell
        out[s, 1] = (bm - fx + ell) // 2
        out[s, 2] = bm - fx
        out[s, 3] = by - fx
        out[s, 4] = fx_new - fx


@_jit
def crossover_trials(x, z, pos, ell, lam, c, gen, trials, out):
    """Best-of-``lam`` crossover gain Om(y) - Om(x) for a fixed pair (x, x').

    ``x'`` is ``x`` with ``pos[:ell]`` flipped.  Selection is not applied.
    """
    n = x.size
    fx = agreement(x, z)
    idx_cur = np.empty(max(ell, 1), np.int64)
    idx_best = np.empty(max(ell, 1), np.int64)
    mark = np.zeros(max(ell, 1), np.uint8)
    big = lam + 1
    for s in range(trials):
        _, _, _, by, _ = crossover_phase(
            x, z, fx, n, lam, c, ell, pos, gen, False, 0, big, -1,
            idx_cur, idx_best, mark)
        out[s] = by - fx


@_jit
def coupon_rounds(n, C, gen, reps, out):
    """Rounds until all ``n`` coupon types are held; each round yields a
    uniformly typed coupon with probability ``C`` and nothing otherwise."""
    have = np.zeros(n, np.uint8)
    for r in range(reps):
        have[:] = 0
        missing = n
        rounds = 0
        while missing > 0:
            rounds += 1
            if gen.random() < C:
                t = _randbelow(gen, n)
                if have[t] == 0:
                    have[t] = 1
                    missing -= 1
        out[r] = rounds
