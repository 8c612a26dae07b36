import itertools
import math

import numpy as np
import pytest

from grandlab.channel import modulate_bpsk
from grandlab.codes import hamming_7_4, repetition_code
from grandlab.errors import CapacityError, InvalidParameterError
from grandlab.oracle import (
    genie_search_trials,
    ml_decode_bruteforce,
    q_formula_estimate,
    sort_patterns_by_posterior,
)
from grandlab.patterns import Schedule, enumerate_schedule, rank_weight_function
from grandlab.rngstreams import substream


class TestMlBruteForce:
    def test_exact_codeword_point(self):
        code = hamming_7_4()
        cw = code.encode(np.array([1, 1, 0, 1], dtype=np.uint8))
        assert np.array_equal(ml_decode_bruteforce(modulate_bpsk(cw), code), cw)

    def test_repetition_hand_example(self):
        code = repetition_code(3)
        best = ml_decode_bruteforce(np.array([0.1, 0.2, -0.05]), code)
        assert best.tolist() == [0, 0, 0]

    def test_capacity_cap(self):
        from grandlab.codes.linear import LinearCode

        big = LinearCode(
            name="wide",
            generator=np.concatenate(
                [np.eye(17, dtype=np.uint8), np.zeros((17, 1), dtype=np.uint8)], axis=1
            ),
            parity_check=np.concatenate(
                [np.zeros((1, 17), dtype=np.uint8), np.ones((1, 1), dtype=np.uint8)], axis=1
            ),
        )
        with pytest.raises(CapacityError):
            ml_decode_bruteforce(np.zeros(18), big)


class TestGenieSearch:
    def test_noiseless_limit_stops_at_one(self):
        est = genie_search_trials("rank", sigma=1e-3, n=6, trials=300, seed=0)
        assert est.mean == pytest.approx(1.0)

    @pytest.mark.parametrize("policy", ["unit", "rank", "sgrand"])
    def test_degenerate_channel_uniform_stop(self, policy):
        # sigma huge: hard decisions are coin flips, so the stop index is
        # uniform on 1..2^n and every policy averages (2^n+1)/2
        n, trials = 8, 4000
        est = genie_search_trials(policy, sigma=10**9, n=n, trials=trials, seed=1)
        expect = ((1 << n) + 1) / 2
        spread = (1 << n) / math.sqrt(12 * trials)
        assert abs(est.mean - expect) <= 3 * spread

    def test_agrees_with_q_formula(self):
        g = genie_search_trials("rank", 1.0, 8, 4000, seed=2)
        q = q_formula_estimate("rank", 1.0, 8, 4000, seed=3)
        assert abs(g.mean - q.mean) <= 3 * math.hypot(g.stderr, q.stderr)

    def test_custom_full_schedule_accepted(self):
        sched = enumerate_schedule(rank_weight_function(5), 5, 32)
        est = genie_search_trials(sched, 0.8, 5, 500, seed=4)
        assert 1.0 <= est.mean <= 32.0

    def test_partial_schedule_rejected(self):
        sched = enumerate_schedule(rank_weight_function(5), 5, 16)
        with pytest.raises(InvalidParameterError):
            genie_search_trials(sched, 0.8, 5, 100, seed=5)

    def test_capacity_cap(self):
        with pytest.raises(CapacityError):
            genie_search_trials("rank", 1.0, 15, 10, seed=6)


class TestQFormula:
    def test_degenerate_uniform_exact(self):
        # all-zero lam: every posterior is 2^-n, so Q = (2^n + 1)/2 exactly
        from grandlab.reshuffle import schedule_posteriors

        n = 6
        sched = enumerate_schedule(rank_weight_function(n), n, 1 << n)
        s = schedule_posteriors(np.zeros(n), sched)
        t = np.arange(1, (1 << n) + 1, dtype=np.float64)
        assert float(t @ s) == pytest.approx(((1 << n) + 1) / 2, rel=1e-12)

    def test_sgrand_minimizes_q(self):
        # the per-realization descending-posterior arrangement beats other policies
        n, sigma, samples = 8, 1.0, 3000
        q_sgrand = q_formula_estimate("sgrand", sigma, n, samples, seed=7)
        others = []
        for policy in ("rank", "unit"):
            others.append(q_formula_estimate(policy, sigma, n, samples, seed=7))
        rng = substream(8, "random-policy", 0)
        base = enumerate_schedule(rank_weight_function(n), n, 1 << n)
        perm = rng.permutation(1 << n)
        random_sched = Schedule(
            patterns=[()] + [base.patterns[j] for j in perm if base.patterns[j] != ()],
            n=n,
            weight_kind="random",
        )
        others.append(q_formula_estimate(random_sched, sigma, n, samples, seed=7))
        for other in others:
            assert q_sgrand.mean <= other.mean + 3 * math.hypot(q_sgrand.stderr, other.stderr)

    def test_sgrand_strictly_beats_random_policy(self):
        n, sigma, samples = 8, 1.0, 3000
        q_sgrand = q_formula_estimate("sgrand", sigma, n, samples, seed=9)
        base = enumerate_schedule(rank_weight_function(n), n, 1 << n)
        rng = substream(10, "random-policy", 0)
        perm = rng.permutation(1 << n)
        random_sched = Schedule(
            patterns=[()] + [base.patterns[j] for j in perm if base.patterns[j] != ()],
            n=n,
            weight_kind="random",
        )
        q_rand = q_formula_estimate(random_sched, sigma, n, samples, seed=9)
        assert q_sgrand.mean < q_rand.mean


class TestSortByPosterior:
    def test_first_is_empty(self):
        llr = np.random.default_rng(11).normal(0, 1, 6)
        pats = [tuple(c) for r in range(7) for c in itertools.combinations(range(6), r)]
        ordered = sort_patterns_by_posterior(llr, pats)
        assert ordered[0] == ()

    def test_sign_flip_invariance(self):
        rng = np.random.default_rng(12)
        llr = rng.normal(0, 2, 7)
        pats = [tuple(c) for r in range(8) for c in itertools.combinations(range(7), r)]
        assert sort_patterns_by_posterior(llr, pats) == sort_patterns_by_posterior(-llr, pats)

    def test_matches_subset_sum_order(self):
        rng = np.random.default_rng(13)
        n = 8
        pats = [tuple(c) for r in range(n + 1) for c in itertools.combinations(range(n), r)]
        for _ in range(100):
            llr = rng.normal(0, 2, n)
            mags = np.abs(llr)
            by_post = sort_patterns_by_posterior(llr, pats)
            by_sum = sorted(pats, key=lambda p: (math.fsum(mags[i] for i in p), len(p), p))
            assert by_post == by_sum
