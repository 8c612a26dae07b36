"""Self-contained oracle property suite, runnable from the CLI and service.

Each property pits an implementation against an independent route (two
estimators of the same quantity, two formulas for the same sum, a
brute-force sort against the streaming order) and reports pass/fail with a
one-line detail. The quick variant trims grid sizes to stay under a
minute on a laptop-class machine.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .oracle import genie_search_trials, q_formula_estimate, sort_patterns_by_posterior
from .patterns import enumerate_schedule, rank_weight_function
from .reshuffle import excess_queries_estimate, schedule_posteriors
from .rngstreams import substream


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    detail: str


def _two_estimator_agreement(quick: bool, seed: int) -> PropertyResult:
    """Genie-search empirical mean vs the expected-query-count formula."""
    ns = (6, 8) if quick else (6, 8, 10)
    sigmas = (0.5, 1.0) if quick else (0.5, 1.0, 2.0)
    trials = 1500 if quick else 3000
    worst = 0.0
    worst_cell = ""
    for n, sigma, policy in itertools.product(ns, sigmas, ("unit", "rank", "sgrand")):
        g = genie_search_trials(policy, sigma, n, trials, seed=seed)
        q = q_formula_estimate(policy, sigma, n, trials, seed=seed + 1)
        z = abs(g.mean - q.mean) / math.hypot(g.stderr, q.stderr)
        if z > worst:
            worst, worst_cell = z, f"n={n} sigma={sigma} {policy}"
    return PropertyResult(
        "expected-queries-two-estimator-agreement",
        worst <= 3.0,
        f"worst |z| = {worst:.2f} at {worst_cell} (tolerance 3 combined stderr)",
    )


def _posterior_order_equivalence(quick: bool, seed: int) -> PropertyResult:
    """Descending posterior equals ascending |llr| subset sums (SGRAND order)."""
    n = 8 if quick else 10
    reps = 50 if quick else 200
    rng = substream(seed, "posterior-order", 0)
    pats = [tuple(c) for r in range(n + 1) for c in itertools.combinations(range(n), r)]
    for i in range(reps):
        llr = rng.normal(0.0, 2.0, n)
        mags = np.abs(llr)
        by_post = sort_patterns_by_posterior(llr, pats)
        by_sum = sorted(pats, key=lambda p: (math.fsum(mags[j] for j in p), len(p), p))
        if by_post != by_sum:
            return PropertyResult(
                "sgrand-posterior-order-equivalence", False, f"order mismatch at replicate {i}"
            )
    return PropertyResult(
        "sgrand-posterior-order-equivalence",
        True,
        f"{reps} replicates at n={n}, orders identical",
    )


def _excess_dual_form(quick: bool, seed: int) -> PropertyResult:
    """Pairwise-inversion sum equals the rank-difference sum per realization."""
    reps = 200 if quick else 1000
    rng = substream(seed, "excess-dual-form", 0)
    worst = 0.0
    for _ in range(reps):
        m = int(rng.integers(2, 256 if quick else 2048))
        s = rng.random(m)
        est = excess_queries_estimate(s[None, :])
        denom = max(abs(est.pairwise), 1e-300)
        worst = max(worst, abs(est.pairwise - est.rank_based) / denom)
    return PropertyResult(
        "excess-queries-dual-form-identity",
        worst <= 1e-12,
        f"worst relative gap {worst:.2e} over {reps} vectors (tolerance 1e-12)",
    )


def _descending_mean_optimality(quick: bool, seed: int) -> PropertyResult:
    """Sorting the mean posteriors descending weakly reduces expected queries."""
    n = 8
    sched = enumerate_schedule(rank_weight_function(n), n, 1 << n)
    rng = substream(seed, "descending-mean", 0)
    samples = 1500 if quick else 4000
    sigma = 1.0
    svecs = np.empty((samples, 1 << n))
    for i in range(samples):
        lam = np.sort(np.abs(2.0 * (1.0 + sigma * rng.standard_normal(n)) / sigma**2))
        svecs[i] = schedule_posteriors(lam, sched)
    t = np.arange(1, (1 << n) + 1, dtype=np.float64)
    mean_s = svecs.mean(axis=0)
    q_base = float(mean_s @ t)
    order = np.argsort(-mean_s, kind="stable")
    q_sorted = float(mean_s[order] @ t)
    return PropertyResult(
        "descending-mean-schedule-optimality",
        q_sorted <= q_base + 1e-9,
        f"Q(base)={q_base:.4f} >= Q(sorted)={q_sorted:.4f}",
    )


def _posterior_normalization(quick: bool, seed: int) -> PropertyResult:
    """Posteriors over all 2^n patterns sum to one."""
    n = 12 if quick else 16
    reps = 20 if quick else 100
    rng = substream(seed, "normalization", 0)
    idx = np.arange(1 << n, dtype=np.uint32)
    bits = ((idx[:, None] >> np.arange(n)) & 1).astype(np.float64)
    from scipy.special import log_expit

    worst = 0.0
    for _ in range(reps):
        lam = np.sort(np.abs(rng.normal(1.0, 1.0, n) * 4.0))
        base = float(np.sum(log_expit(lam)))
        total = float(np.exp(base - bits @ lam).sum())
        worst = max(worst, abs(total - 1.0))
    return PropertyResult(
        "posterior-normalization",
        worst <= 1e-9,
        f"worst |sum-1| = {worst:.2e} over {reps} draws at n={n} (tolerance 1e-9)",
    )


def run_verification(quick: bool = False, seed: int = 0) -> list[PropertyResult]:
    return [
        _posterior_normalization(quick, seed),
        _excess_dual_form(quick, seed),
        _posterior_order_equivalence(quick, seed),
        _descending_mean_optimality(quick, seed),
        _two_estimator_agreement(quick, seed),
    ]
