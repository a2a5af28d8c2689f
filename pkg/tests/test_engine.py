from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from llga.bitcore import MASK64, BitString, ContractError, GaParams, RandomSource
from llga.engine import reference_iteration, run_iteration, run_until_distance, run_until_optimum
from llga.fitness import EvaluationCounter, FitnessFunction
from llga.oracle import build_kernel


def _point(n, d, seed):
    rng = np.random.default_rng(seed)
    x = np.ones(n, np.uint8)
    x[rng.choice(n, d, replace=False)] = 0
    return BitString(x)


def test_degenerate_round_n1():
    params, f = GaParams(1, 1), FitnessFunction.onemax(1)
    counter = EvaluationCounter(count=1)
    y, tr = run_iteration(BitString.zeros(1), params, f, counter, RandomSource(5))
    assert y == BitString.ones(1)
    assert tr.ell == 1 and tr.crossover_gain == 1 and tr.accepted
    assert counter.count == 3 and counter.first_optimum_at == 2


def test_degenerate_run_n1():
    params, f = GaParams(1, 1), FitnessFunction.onemax(1)
    res, tr = run_until_optimum(params, f, 9, 100, trace=True, start=BitString.zeros(1))
    assert (res.evaluations, res.iterations, res.censored, res.final_distance) == (2, 1, False, 0)
    assert len(tr) == 1 and tr[0].evaluations == 1


def test_optimal_start():
    res, tr = run_until_optimum(GaParams(8, 2), FitnessFunction.onemax(8), 1, 100, trace=True,
                                start=BitString.ones(8))
    assert (res.evaluations, res.iterations, res.censored) == (1, 0, False)
    assert tr == []


def test_optimum_is_absorbing_for_full_rounds():
    params, f = GaParams(10, 3), FitnessFunction.onemax(10)
    rng = RandomSource(3)
    x = BitString.ones(10)
    counter = EvaluationCounter(count=1)
    for _ in range(200):
        x, tr = run_iteration(x, params, f, counter, rng)
        assert x == BitString.ones(10)
        assert tr.distance_after == 0
    assert counter.count == 1 + 2 * 3 * 200


def test_n2_success_probability():
    params, f = GaParams(2, 1), FitnessFunction.onemax(2)
    rng = RandomSource(17)
    x = BitString.from_str("01")
    trials = 40_000
    hits = 0
    for _ in range(trials):
        y, tr = run_iteration(x, params, f, EvaluationCounter(), rng)
        hits += tr.distance_after == 0
    se = math.sqrt(0.25 * 0.75 / trials)
    assert abs(hits / trials - 0.25) <= 4 * se


def test_counter_grows_by_two_lambda_per_round():
    params, f = GaParams(64, 4), FitnessFunction.onemax(64)
    rng = RandomSource(8)
    x = _point(64, 40, 1)
    counter = EvaluationCounter(count=1)
    for t in range(1, 31):
        x, _ = run_iteration(x, params, f, counter, rng)
        assert counter.count == 1 + 2 * 4 * t


def test_replay_is_bitwise_identical():
    params, f = GaParams(200, 5), FitnessFunction.onemax(200)
    a = run_until_optimum(params, f, 12345, 10**6, trace=True)
    b = run_until_optimum(params, f, 12345, 10**6, trace=True)
    assert a == b
    c, _ = run_until_optimum(params, f, 12345, 10**6, trace=False)
    assert c == a[0]


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 80), lam_frac=st.floats(0, 1), seed=st.integers(0, MASK64))
def test_run_invariants(n, lam_frac, seed):
    lam = 1 + int(lam_frac * (n - 1))
    params, f = GaParams(n, lam), FitnessFunction.onemax(n)
    budget = 20_000
    res, trace = run_until_optimum(params, f, seed, budget, trace=True)
    assert res.evaluations <= budget
    assert len(trace) == res.iterations
    assert 1 + sum(t.evaluations for t in trace) == res.evaluations
    for i, t in enumerate(trace):
        assert t.distance_after <= t.distance_before
        assert t.accepted == (t.crossover_gain >= 0)
        assert 0 <= t.good_bits <= min(t.ell, t.distance_before)
        if i + 1 < len(trace):
            assert t.evaluations == 2 * lam
            assert trace[i + 1].distance_before == t.distance_after
    if not res.censored:
        assert res.final_distance == 0
        if trace:
            assert trace[-1].distance_after == 0
            assert res.evaluations == 1 + 2 * lam * (res.iterations - 1) + trace[-1].evaluations
    else:
        assert res.final_distance > 0


def test_budget_censors():
    res, _ = run_until_optimum(GaParams(500, 1), FitnessFunction.onemax(500), 3, 50)
    assert res.censored and res.evaluations <= 50 and res.final_distance > 0
    with pytest.raises(ContractError):
        run_until_optimum(GaParams(5, 1), FitnessFunction.onemax(5), 3, 0)


def test_generalized_target_mirrors_onemax_exactly():
    n, params = 60, GaParams(60, 3)
    z = RandomSource(1).random_bits(n)
    x = RandomSource(2).random_bits(n)
    mirrored = BitString(1 ^ x.bits ^ z.bits)
    a = run_until_optimum(params, FitnessFunction.generalized(z), 77, 10**6, trace=True, start=x)
    b = run_until_optimum(params, FitnessFunction.onemax(n), 77, 10**6, trace=True, start=mirrored)
    assert a == b


def test_run_until_distance():
    params = GaParams(256, 4)
    res = run_until_distance(params, BitString.zeros(256), 64, 5, 10**6)
    assert not res.censored and res.final_distance <= 64
    with pytest.raises(ContractError):
        run_until_distance(params, BitString.zeros(256), 0, 5, 10**6)


@pytest.mark.parametrize("n, lam, d", [(6, 2, 3), (5, 3, 2), (8, 2, 8)])
def test_compiled_and_literal_rounds_match_the_exact_row(n, lam, d):
    params, f = GaParams(n, lam), FitnessFunction.onemax(n)
    row = build_kernel(n, lam).rows[d]
    trials = 20_000
    x = _point(n, d, 0)
    fast = np.zeros(n + 1)
    slow = np.zeros(n + 1)
    rng_a, rng_b = RandomSource(21), RandomSource(22)
    for _ in range(trials):
        _, tr = run_iteration(x, params, f, EvaluationCounter(), rng_a)
        fast[tr.distance_after] += 1
        y = reference_iteration(x, params, f, EvaluationCounter(), rng_b)
        slow[n - y.count_ones()] += 1
    se = np.sqrt(row * (1 - row) / trials) + 1e-12
    assert np.all(np.abs(fast / trials - row) <= 4.5 * se + 1e-9)
    assert np.all(np.abs(slow / trials - row) <= 4.5 * se + 1e-9)


def test_literal_round_counts_two_lambda():
    params, f = GaParams(10, 3), FitnessFunction.onemax(10)
    counter = EvaluationCounter()
    reference_iteration(_point(10, 5, 3), params, f, counter, RandomSource(1))
    assert counter.count == 6
