import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats
from scipy.optimize import lsq_linear

from grandlab.errors import FileFormatError, InvalidParameterError
from grandlab.patterns import (
    Schedule,
    WeightFunction,
    WeightKind,
    accumulated_weight,
    cdf_weight_function,
    enumerate_schedule,
    load_schedule,
    logistic_weight,
    patterns_at_logistic_weight,
    rank_weight_function,
    save_schedule,
    three_line_weight_function,
    unit_weight_function,
)


def brute_force_order(wf: WeightFunction, n: int) -> list[tuple[int, ...]]:
    """Independent oracle: sort all 2^n patterns by the stated tie rule."""
    pats = [
        tuple(c) for r in range(n + 1) for c in itertools.combinations(range(1, n + 1), r)
    ]
    return sorted(pats, key=lambda p: (accumulated_weight(p, wf), len(p), p))


class TestAccumulatedWeight:
    def test_empty_is_zero(self):
        assert accumulated_weight((), rank_weight_function(4)) == 0.0

    def test_rank_example(self):
        assert accumulated_weight((1, 3), rank_weight_function(3)) == 4.0

    def test_unit_is_hamming_weight(self):
        assert accumulated_weight((2, 3, 5), unit_weight_function(6)) == 3.0


class TestLogisticWeight:
    def test_examples(self):
        assert logistic_weight(()) == 0
        assert logistic_weight((1, 2, 3)) == 6
        assert logistic_weight((5,)) == logistic_weight((1, 4)) == 5


class TestPartitions:
    def test_zero(self):
        assert patterns_at_logistic_weight(0, 5) == [()]

    def test_w3_n3(self):
        assert patterns_at_logistic_weight(3, 3) == [(3,), (1, 2)]

    def test_w6_n4(self):
        # brute force over all 2^4 subsets
        assert patterns_at_logistic_weight(6, 4) == [(2, 4), (1, 2, 3)]

    @pytest.mark.parametrize("n", [6, 10])
    def test_counts_match_enumeration(self, n):
        sched = enumerate_schedule(rank_weight_function(n), n, 1 << n)
        by_weight = {}
        for p in sched.patterns:
            by_weight.setdefault(logistic_weight(p), []).append(p)
        for w, pats in by_weight.items():
            assert sorted(pats) == sorted(patterns_at_logistic_weight(w, n))


class TestEnumerate:
    def test_rank_n3_exact(self):
        sched = enumerate_schedule(rank_weight_function(3), 3, 8)
        assert sched.patterns == [(), (1,), (2,), (3,), (1, 2), (1, 3), (2, 3), (1, 2, 3)]
        wf = rank_weight_function(3)
        assert [accumulated_weight(p, wf) for p in sched.patterns] == [0, 1, 2, 3, 3, 4, 5, 6]

    def test_unit_n4_brute_force(self):
        wf = unit_weight_function(4)
        sched = enumerate_schedule(wf, 4, 16)
        assert sched.patterns == brute_force_order(wf, 4)

    def test_count_one(self):
        assert enumerate_schedule(rank_weight_function(5), 5, 1).patterns == [()]

    def test_count_too_large(self):
        with pytest.raises(InvalidParameterError):
            enumerate_schedule(rank_weight_function(3), 3, 9)

    @pytest.mark.parametrize("kind", ["unit", "rank", "cdf", "3line"])
    def test_matches_brute_force_n8(self, kind):
        n = 8
        if kind == "unit":
            wf = unit_weight_function(n)
        elif kind == "rank":
            wf = rank_weight_function(n)
        elif kind == "cdf":
            wf = cdf_weight_function(n, 0.7, 10**4, np.random.default_rng(3))
        else:
            wf = three_line_weight_function(n, sigma=0.7, mc_samples=10**4, rng=np.random.default_rng(4))
        assert enumerate_schedule(wf, n, 1 << n).patterns == brute_force_order(wf, n)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(2, 9), st.integers(1, 100), st.randoms(use_true_random=False))
    def test_no_duplicates_and_monotone(self, n, count, rnd):
        count = min(count, 1 << n)
        gamma = np.sort(np.array([rnd.uniform(0, 5) for _ in range(n)]))
        wf = WeightFunction(WeightKind.CDF, gamma)
        sched = enumerate_schedule(wf, n, count)
        assert len(set(sched.patterns)) == sched.length == count
        weights = [accumulated_weight(p, wf) for p in sched.patterns]
        assert all(a <= b for a, b in zip(weights, weights[1:]))


class TestCdfWeights:
    def test_nondecreasing(self):
        wf = cdf_weight_function(16, 0.5, 10**4, np.random.default_rng(0))
        assert np.all(np.diff(wf.gamma) >= 0)

    def test_requires_enough_samples(self):
        with pytest.raises(InvalidParameterError):
            cdf_weight_function(8, 0.5, 10**3, np.random.default_rng(0))

    def test_n1_matches_quadrature(self):
        # 1-D quadrature oracle for E|L|, L = (2/s^2)(1 + s Z)
        sigma = 0.8
        samples = 4 * 10**4
        wf = cdf_weight_function(1, sigma, samples, np.random.default_rng(11))
        f = lambda z: abs(2.0 / sigma**2 * (1.0 + sigma * z)) * stats.norm.pdf(z)
        expect, _ = integrate.quad(f, -12, 12)
        # std of |L| is below 2/sigma^2 * (1+3s); 3 standard errors
        tol = 3 * (2 / sigma**2) * (1 + 3 * sigma) / math.sqrt(samples)
        assert abs(wf.gamma[0] - expect) < tol

    def test_large_sigma_half_normal_order_stats(self):
        # with sigma large, |L| ~ (2/sigma)|Z|; order-statistic oracle at n=2
        # via quadrature of the min/max densities of two folded normals
        sigma = 1e4
        wf = cdf_weight_function(2, sigma, 2 * 10**5, np.random.default_rng(13))
        fmin = lambda z: z * 2 * stats.norm.pdf(z) * 2 * (1 - (2 * stats.norm.cdf(z) - 1))
        fmax = lambda z: z * 2 * stats.norm.pdf(z) * 2 * (2 * stats.norm.cdf(z) - 1)
        e_min, _ = integrate.quad(fmin, 0, 12)
        e_max, _ = integrate.quad(fmax, 0, 12)
        scale = 2.0 / sigma
        assert wf.gamma[0] / scale == pytest.approx(e_min, rel=0.02)
        assert wf.gamma[1] / scale == pytest.approx(e_max, rel=0.02)


class TestThreeLine:
    def test_degenerate_equals_rank(self):
        wf = three_line_weight_function(8, segments=[(1.0, 3), (1.0, 6), (1.0, 8)])
        assert np.allclose(wf.gamma, rank_weight_function(8).gamma)

    def test_nondecreasing(self):
        wf = three_line_weight_function(10, segments=[(0.5, 2), (0.0, 7), (2.0, 10)], intercept=1.0)
        assert np.all(np.diff(wf.gamma) >= -1e-12)

    def test_invalid_breakpoints(self):
        with pytest.raises(InvalidParameterError):
            three_line_weight_function(8, segments=[(1.0, 6), (1.0, 3), (1.0, 8)])
        with pytest.raises(InvalidParameterError):
            three_line_weight_function(8, segments=[(-1.0, 2), (1.0, 4), (1.0, 8)])

    def test_fit_beats_single_segment(self):
        n = 32
        target = cdf_weight_function(n, 0.6, 2 * 10**4, np.random.default_rng(21))
        fitted = three_line_weight_function(n, fit_to=target)
        r = np.arange(1, n + 1, dtype=np.float64)
        one_seg = lsq_linear(np.column_stack([np.ones(n), r]), target.gamma, bounds=(0, np.inf))
        sse_one = np.sum((np.column_stack([np.ones(n), r]) @ one_seg.x - target.gamma) ** 2)
        assert fitted.params["fit_sse"] <= sse_one + 1e-9


class TestScheduleFiles:
    def test_round_trip_large(self, tmp_path):
        sched = enumerate_schedule(rank_weight_function(127), 127, 10**4)
        path = tmp_path / "big.sched"
        save_schedule(sched, path)
        back = load_schedule(path)
        assert back.patterns == sched.patterns
        assert back.n == sched.n and back.weight_kind == sched.weight_kind
        save_schedule(back, tmp_path / "again.sched")
        assert (tmp_path / "big.sched").read_bytes() == (tmp_path / "again.sched").read_bytes()

    def test_truncated_file_rejected(self, tmp_path):
        sched = enumerate_schedule(rank_weight_function(5), 5, 12)
        path = tmp_path / "s.sched"
        save_schedule(sched, path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-3]) + "\n")
        with pytest.raises(FileFormatError):
            load_schedule(path)

    def test_empty_schedule_rejected(self, tmp_path):
        path = tmp_path / "empty.sched"
        path.write_text("SCHED v1 n=4 count=0 kind=rank\n")
        with pytest.raises(FileFormatError):
            load_schedule(path)

    def test_must_start_with_empty_pattern(self):
        with pytest.raises(InvalidParameterError):
            Schedule(patterns=[(1,)], n=4)

    def test_out_of_range_rank_rejected(self, tmp_path):
        path = tmp_path / "bad.sched"
        path.write_text("SCHED v1 n=4 count=2 kind=rank\n-\n1 9\n")
        with pytest.raises(FileFormatError, match="rank out of range"):
            load_schedule(path)

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "hdr.sched"
        path.write_text("SCHEDULE v2 whatever\n")
        with pytest.raises(FileFormatError, match="header"):
            load_schedule(path)

    def test_missing_file_is_io_error(self, tmp_path):
        with pytest.raises(OSError):
            load_schedule(tmp_path / "nope.sched")
