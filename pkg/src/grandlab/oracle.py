"""Brute-force references for small instances.

Exhaustive ML decoding, the genie-assisted search problem (only the
transmitted word stops the query loop), the expected-query-count formula
Q = sum_t t * E[S_t] evaluated by Monte Carlo over all 2^n patterns, and
descending-posterior pattern ordering. These are the independent routes
the fast implementations are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_expit

from .channel import hard_decision, modulate_bpsk
from .errors import CapacityError, InvalidParameterError
from .patterns import Schedule, enumerate_schedule, rank_weight_function, unit_weight_function
from .reshuffle import schedule_posteriors
from .rngstreams import substream

_GENIE_MAX_N = 14


def ml_decode_bruteforce(y: np.ndarray, code) -> np.ndarray:
    """Codeword whose BPSK image is closest to y; ties to the lexicographically least.

    Minimizing Euclidean distance to the modulated codeword equals
    minimizing the inner product of y with the codeword bits.
    """
    y = np.asarray(y, dtype=np.float64)
    words = code.all_codewords()
    scores = words @ y
    best = np.min(scores)
    tied = np.nonzero(scores == best)[0]
    if len(tied) == 1:
        return words[tied[0]]
    rows = sorted(tied.tolist(), key=lambda i: words[i].tolist())
    return words[rows[0]]


def _subset_bit_matrix(n: int) -> np.ndarray:
    if n > _GENIE_MAX_N:
        raise CapacityError(f"exhaustive enumeration capped at n={_GENIE_MAX_N}")
    idx = np.arange(1 << n, dtype=np.uint32)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.float64)


def _full_schedule(policy, n: int) -> Schedule | None:
    """Materialize a static policy covering all 2^n patterns, or None for sgrand."""
    if isinstance(policy, Schedule):
        if policy.length != (1 << n) or policy.n != n:
            raise InvalidParameterError("genie search needs a policy covering all 2^n patterns")
        return policy
    if policy == "unit":
        return enumerate_schedule(unit_weight_function(n), n, 1 << n)
    if policy == "rank":
        return enumerate_schedule(rank_weight_function(n), n, 1 << n)
    if policy == "sgrand":
        return None
    raise InvalidParameterError(f"unknown policy {policy!r}")


@dataclass(frozen=True)
class MeanEstimate:
    mean: float
    stderr: float
    samples: int


def genie_search_trials(policy, sigma: float, n: int, trials: int, seed: int) -> MeanEstimate:
    """Empirical mean query index at which the transmitted word is met.

    W is uniform over all of F_2^n (the i.i.d.-bits regime of the search
    problem), X its BPSK image, Y the noisy output; the trial's stop index
    is the policy position of the true error pattern theta(Y) xor W.
    """
    if n > _GENIE_MAX_N:
        raise CapacityError(f"genie search capped at n={_GENIE_MAX_N}")
    schedule = _full_schedule(policy, n)
    index_of = None
    bits = None
    if schedule is not None:
        index_of = {p: t for t, p in enumerate(schedule.patterns, start=1)}
    else:
        bits = _subset_bit_matrix(n)
    rng = substream(seed, "genie", 0)
    stops = np.empty(trials)
    powers = 2 ** np.arange(n)
    for i in range(trials):
        w = rng.integers(0, 2, size=n).astype(np.uint8)
        y = modulate_bpsk(w) + sigma * rng.standard_normal(n)
        err = hard_decision(y) ^ w
        mags = np.abs(y)  # same ranking as |llr|
        if schedule is not None:
            order = np.argsort(mags, kind="stable")
            perm = np.empty(n, dtype=np.int64)
            perm[order] = np.arange(1, n + 1)
            target = tuple(sorted(perm[err.astype(bool)].tolist()))
            stops[i] = index_of[target]
        else:
            stops[i] = _sgrand_stop_index(mags, err, powers, bits)
    mean = float(stops.mean())
    stderr = float(stops.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("inf")
    return MeanEstimate(mean=mean, stderr=stderr, samples=trials)


def _sgrand_stop_index(mags: np.ndarray, err: np.ndarray, powers: np.ndarray, bits: np.ndarray) -> int:
    """Position of the true pattern in the SGRAND order, by ranking all subsets."""
    sums = bits @ mags
    target_idx = int((err.astype(np.int64) * powers).sum())
    s_t = sums[target_idx]
    before = int(np.sum(sums < s_t))
    tied = np.nonzero(sums == s_t)[0]
    if len(tied) > 1:
        t_support = int(err.sum())
        t_positions = tuple(np.nonzero(err)[0].tolist())
        for j in tied:
            if j == target_idx:
                continue
            support = int(bits[j].sum())
            positions = tuple(np.nonzero(bits[j])[0].tolist())
            if (support, positions) < (t_support, t_positions):
                before += 1
    return before + 1


def q_formula_estimate(policy, sigma: float, n: int, mc_samples: int, seed: int) -> MeanEstimate:
    """Monte Carlo estimate of Q = sum_t t * E[S_t] over all 2^n patterns.

    For static policies the posteriors follow the schedule order; for
    sgrand they are the per-realization descending sort (the minimizing
    arrangement).
    """
    if n > _GENIE_MAX_N:
        raise CapacityError(f"q formula estimate capped at n={_GENIE_MAX_N}")
    schedule = _full_schedule(policy, n)
    bits = None if schedule is not None else _subset_bit_matrix(n)
    rng = substream(seed, "q-formula", 0)
    t_vec = np.arange(1, (1 << n) + 1, dtype=np.float64)
    vals = np.empty(mc_samples)
    for i in range(mc_samples):
        y = 1.0 + sigma * rng.standard_normal(n)
        lam = np.sort(np.abs(2.0 * y / sigma**2))
        if schedule is not None:
            s = schedule_posteriors(lam, schedule)
        else:
            base = float(np.sum(log_expit(lam)))
            s = np.sort(np.exp(base - bits @ lam))[::-1]
        vals[i] = t_vec @ s
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(mc_samples)) if mc_samples > 1 else float("inf")
    return MeanEstimate(mean=mean, stderr=stderr, samples=mc_samples)


def sort_patterns_by_posterior(llr: np.ndarray, patterns) -> list[tuple[int, ...]]:
    """Position-domain patterns by descending posterior, SGRAND tie rule.

    The posterior of each pattern is evaluated directly from the per-bit
    flip/keep log-probabilities (independently of any |llr|-sum shortcut).
    """
    mags = np.abs(np.asarray(llr, dtype=np.float64))
    log_keep = log_expit(mags)
    log_flip = log_expit(-mags)

    def log_post(p):
        flipped = set(p)
        return math.fsum(
            (log_flip[i] if i in flipped else log_keep[i]) for i in range(len(mags))
        )

    pats = [tuple(sorted(p)) for p in patterns]
    return sorted(pats, key=lambda p: (-log_post(p), len(p), p))
