from __future__ import annotations

import math
import warnings

import numpy as np
import pytest

from llga import harness
from llga.bitcore import BitString, ContractError, RandomSource
from llga.oracle import build_kernel, expected_times


def test_summarize_conventions():
    st = harness.summarize([42])
    assert (st.mean, st.std_err, st.median, st.reps) == (42.0, 0.0, 42.0, 1)
    st = harness.summarize([1, 2, 3, 100], [False, False, False, True])
    assert st.mean == 2.0 and st.censored_count == 1 and st.reps == 4
    assert st.q05 <= st.median <= st.q95
    st = harness.summarize([5, 6], [True, True])
    assert st.all_censored and math.isnan(st.mean)
    v = np.arange(1, 101, dtype=float)
    assert harness.nearest_rank(v, 0.05) == 5 and harness.nearest_rank(v, 0.95) == 95


def test_experiment_config():
    cfg = harness.ExperimentConfig([16, 256], "auto", 3)
    assert cfg.lambdas_for(2 ** 16) == [6]
    with pytest.raises(ContractError):
        harness.ExperimentConfig([8], [9], 3)
    with pytest.raises(ContractError):
        harness.ExperimentConfig([8], [2], 0)
    with pytest.raises(ContractError):
        harness.ExperimentConfig([0], [1], 1)


def test_default_budget():
    assert harness.default_budget(1024, 4) == 50 * 2560


def test_tiny_instance_mean_is_three_halves():
    st = harness.run_replications(1, 1, 4000, 0)
    assert abs(st.mean - 1.5) <= 3 * st.std_err
    assert expected_times(build_kernel(1, 1)).expected_evaluations_exact == pytest.approx(1.5)


def test_replications_do_not_depend_on_threads():
    a = harness.replicate(128, 3, 40, 99, threads=1)
    b = harness.replicate(128, 3, 40, 99, threads=4)
    assert a == b
    c = harness.replicate(128, 3, 40, 99, threads=4, random_target=True)
    assert c == harness.replicate(128, 3, 40, 99, threads=1, random_target=True)


def test_all_censored_warns():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        st = harness.run_replications(256, 2, 5, 0, budget=3)
    assert st.all_censored
    assert any(issubclass(x.category, RuntimeWarning) for x in w)


def test_sweep():
    res = harness.lambda_sweep(64, [3], 10, 1)
    assert res.argmin == 3 and len(res.rows) == 1
    res = harness.lambda_sweep(128, [1, 2, 4, 8], 50, 1)
    means = {lam: st.mean for lam, st in res.rows}
    assert res.argmin == min(means, key=lambda lam: (means[lam], lam))


def test_drift_profile_gains_are_nonnegative():
    s = harness.sample_iterations(512, 8, 100, 2000, 3)
    assert np.all(s[:, 4] >= 0)
    assert np.all(s[:, 1] <= np.minimum(s[:, 0], 100))
    prof = harness.drift_profile(512, 8, [256, 64, 4], 40, 7, min_samples=50)
    assert [b.d for b in prof.bins] == [256, 64, 4]
    assert all(b.sparse for b in prof.bins)
    assert all(b.mean_gain >= 0 for b in prof.bins)
    with pytest.raises(ContractError):
        harness.sample_iterations(16, 2, 0, 10, 1)


def test_success_probability():
    (row,) = harness.success_probability(64, 4, [64], 2000, 1)
    assert row.freq_improve >= 0.5
    rows = harness.success_probability(1024, 4, [1, 4, 16, 64], 20_000, 5)
    implied = [r.implied_c for r in rows]
    assert min(implied) > 0
    assert max(implied) / min(implied) <= 4
    (lam1,) = harness.success_probability(64, 1, [10], 100, 1)
    assert math.isnan(lam1.implied_c)


def test_tail_estimate():
    rep = harness.tail_estimate(256, 4, 400, [0.0, 0.5, 1.0, 2.0], 3)
    freqs = [r.freq_exceed for r in rep.rows]
    assert 0 < freqs[0] < 1
    assert freqs == sorted(freqs, reverse=True)
    assert rep.rows[0].threshold == pytest.approx(rep.stats.mean)
    assert rep.rows[2].reference_bound == pytest.approx((256 / 16) ** -1)


def test_lemma41_trivial_instance():
    rep = harness.lemma41_check(1, 1.0, 1000, [1.0, 2.0], 0)
    assert rep.mean == 1.0 and rep.std_err == 0.0
    assert all(r.freq == 0.0 for r in rep.rows)
    assert rep.coupon_moments == (1.0, 1.0)


def test_construct_pair():
    rng = RandomSource(4)
    x, xp = harness.construct_pair(100, 30, 12, 5, rng)
    assert 100 - x.count_ones() == 30
    assert x.hamming(xp) == 12
    assert int(np.sum((x.bits == 0) & (xp.bits == 1))) == 5
    with pytest.raises(ContractError):
        harness.construct_pair(10, 2, 5, 3, rng)


def test_crossover_gain_trials():
    x, xp = BitString.zeros(6), BitString.ones(6)
    assert np.all(harness.crossover_gain_trials(x, xp, 4, 100, 1, c=1.0) == 6)
    assert np.all(harness.crossover_gain_trials(x, xp, 4, 100, 1, c=0.0) == 0)
    g = harness.crossover_gain_trials(x, xp, 1, 20_000, 2, c=0.5)
    assert abs(g.mean() - 3) < 0.05


def test_reservoir_tie_break_in_compiled_crossover():
    # with lam children and a single good flip, P(best gain = 1) = 1 - (1 - c)^lam
    x, xp = BitString.zeros(1), BitString.ones(1)
    g = harness.crossover_gain_trials(x, xp, 5, 100_000, 3)
    assert abs(g.mean() - (1 - 0.8 ** 5)) <= 0.01


def test_mutation_concentration_knob():
    loose = harness.mutation_concentration(2048, 16, 1024, 0.5, 2000, 1)
    tight = harness.mutation_concentration(2048, 16, 1024, 0.05, 2000, 1)
    assert 0 <= tight <= loose <= 1


def test_drift_consistency_small():
    r = harness.drift_consistency(1024, 16, 512, 128, 10, 200, 3)
    assert 1 / 3 <= r.ratio <= 3
    with pytest.raises(ContractError):
        harness.drift_consistency(1024, 16, 100, 200, 10, 200, 3)


def test_unbiasedness_small():
    rep = harness.unbiasedness(128, 2, 300, 8)
    assert rep.onemax.reps == rep.generalized.reps == 300
    assert abs(rep.z_score) < 4
