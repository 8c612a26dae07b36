"""The GRAND query loop: test candidate error patterns until a codeword hits.

Two ordering policies: a static rank-domain schedule (any ORB-type policy,
reshuffled or not), and SGRAND's online best-first stream ordered by the
sum of |LLR| over flipped positions. Both share the packed-syndrome
membership test; the static path scans the schedule in growing numpy
chunks with one XOR-reduce per pattern, the online path keeps incremental
syndromes in its frontier nodes.
"""

from __future__ import annotations

import enum
import heapq
import time
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .channel import compute_llr, hard_decision
from .errors import InvalidParameterError
from .patterns import RankPattern, Schedule

_CHUNK0 = 256
_CHUNK_GROWTH = 4


class Outcome(enum.Enum):
    FOUND = "found"
    ABANDONED = "abandoned"


@dataclass(frozen=True)
class DecodeResult:
    outcome: Outcome
    codeword: np.ndarray | None
    queries_used: int

    @property
    def found(self) -> bool:
        return self.outcome is Outcome.FOUND


class PolicyKind(enum.Enum):
    STATIC_SCHEDULE = "static"
    SGRAND_ONLINE = "sgrand"


@dataclass(frozen=True)
class OrderingPolicy:
    """Which patterns to query, in what order, and the truncation budget T."""

    kind: PolicyKind
    truncation: int
    schedule: Schedule | None = None

    def __post_init__(self):
        if self.truncation < 1:
            raise InvalidParameterError("truncation T must be >= 1")
        if self.kind is PolicyKind.STATIC_SCHEDULE:
            if self.schedule is None:
                raise InvalidParameterError("static policy needs a schedule")
            if self.truncation > self.schedule.length:
                raise InvalidParameterError(
                    f"T={self.truncation} exceeds schedule length {self.schedule.length}"
                )


def static_policy(schedule: Schedule, truncation: int | None = None) -> OrderingPolicy:
    return OrderingPolicy(
        kind=PolicyKind.STATIC_SCHEDULE,
        truncation=truncation if truncation is not None else schedule.length,
        schedule=schedule,
    )


def sgrand_policy(truncation: int) -> OrderingPolicy:
    return OrderingPolicy(kind=PolicyKind.SGRAND_ONLINE, truncation=truncation)


class QueryStats:
    """Optional per-decode instrumentation; costs nothing when not passed in."""

    def __init__(self):
        self.decodes = 0
        self.total_queries = 0
        self.wall_seconds = 0.0

    def record(self, queries: int, wall: float) -> None:
        self.decodes += 1
        self.total_queries += queries
        self.wall_seconds += wall


def rank_map(llr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(position -> 1-based rank, rank-1 -> position), ranks by ascending |llr|.

    Ties break by ascending position (stable), so the maps are deterministic
    and mutually inverse bijections.
    """
    mags = np.abs(np.asarray(llr, dtype=np.float64))
    inv = np.argsort(mags, kind="stable").astype(np.int64)
    perm = np.empty(len(inv), dtype=np.int64)
    perm[inv] = np.arange(1, len(inv) + 1)
    return perm, inv


def apply_pattern(hard: np.ndarray, p: RankPattern, inv: np.ndarray) -> np.ndarray:
    """Flip the positions holding the pattern's ranks; XOR, so an involution."""
    out = np.asarray(hard, dtype=np.uint8).copy()
    for r in p:
        out[inv[r - 1]] ^= 1
    return out


def sgrand_pattern_stream(llr: np.ndarray) -> Iterator[tuple[int, ...]]:
    """Position-domain patterns in nondecreasing sum of |llr| over the support.

    Emits each of the 2^n patterns exactly once if exhausted, starting with
    the empty pattern. Ties break by smaller support, then lexicographically
    smaller *position* tuple, mirroring the schedule tie rule.
    """
    mags = np.abs(np.asarray(llr, dtype=np.float64))
    order = np.argsort(mags, kind="stable")
    lam = mags[order].tolist()
    pos = order.tolist()
    n = len(lam)
    yield ()
    if n == 0:
        return
    heap: list[tuple[float, int, tuple[int, ...], tuple[int, ...]]] = [
        (lam[0], 1, (pos[0],), (1,))
    ]
    while heap:
        w, size, positions, ranks = heapq.heappop(heap)
        yield positions
        top = ranks[-1]
        if top < n:
            grown = tuple(sorted(positions + (pos[top],)))
            heapq.heappush(heap, (w + lam[top], size + 1, grown, ranks + (top + 1,)))
            moved = tuple(sorted(tuple(q for q in positions if q != pos[top - 1]) + (pos[top],)))
            heapq.heappush(
                heap,
                (w - lam[top - 1] + lam[top], size, moved, ranks[:-1] + (top + 1,)),
            )


def decode(
    y: np.ndarray,
    code,
    policy: OrderingPolicy,
    sigma: float = 1.0,
    stats: QueryStats | None = None,
) -> DecodeResult:
    """Query patterns in policy order against the hard decision of y.

    Returns FOUND with the first codeword hit and the number of queries
    spent, or ABANDONED after T misses. The first query of every policy is
    the empty pattern (the hard decision itself). Outcomes depend on y only
    through its signs and the ordering of |llr|, never on sigma's scale.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (code.n,):
        raise InvalidParameterError(f"y has shape {y.shape}, code expects ({code.n},)")
    t0 = time.perf_counter() if stats is not None else 0.0
    llr = compute_llr(y, sigma)
    hard = hard_decision(y)
    if policy.kind is PolicyKind.STATIC_SCHEDULE:
        result = _decode_static(llr, hard, code, policy.schedule, policy.truncation)
    else:
        result = _decode_sgrand(llr, hard, code, policy.truncation)
    if stats is not None:
        stats.record(result.queries_used, time.perf_counter() - t0)
    return result


def _decode_static(llr, hard, code, schedule: Schedule, T: int) -> DecodeResult:
    s0 = code.packed_syndrome(hard)
    if s0 == 0:
        return DecodeResult(Outcome.FOUND, hard, 1)
    if T == 1:
        return DecodeResult(Outcome.ABANDONED, None, T)
    _, inv = rank_map(llr)
    cols = code.col_syndromes
    if cols is None:
        return _decode_static_fallback(hard, code, schedule, T, inv, s0)
    cols_by_rank = cols[inv]
    flat, offsets = schedule.compiled()
    target = np.uint64(s0)
    n_tail = min(T, schedule.length) - 1
    start = 0
    chunk = _CHUNK0
    while start < n_tail:
        stop = min(start + chunk, n_tail)
        lo = offsets[start]
        hi = offsets[stop] if stop < len(offsets) else len(flat)
        seg = cols_by_rank[flat[lo:hi]]
        xors = np.bitwise_xor.reduceat(seg, offsets[start:stop] - lo)
        hits = np.nonzero(xors == target)[0]
        if hits.size:
            t = start + int(hits[0]) + 2
            word = apply_pattern(hard, schedule.patterns[t - 1], inv)
            return DecodeResult(Outcome.FOUND, word, t)
        start = stop
        chunk *= _CHUNK_GROWTH
    return DecodeResult(Outcome.ABANDONED, None, T)


def _decode_static_fallback(hard, code, schedule, T, inv, s0) -> DecodeResult:
    for t in range(2, min(T, schedule.length) + 1):
        word = apply_pattern(hard, schedule.patterns[t - 1], inv)
        if code.contains(word):
            return DecodeResult(Outcome.FOUND, word, t)
    return DecodeResult(Outcome.ABANDONED, None, T)


def _decode_sgrand(llr, hard, code, T: int) -> DecodeResult:
    s0 = code.packed_syndrome(hard)
    if s0 == 0:
        return DecodeResult(Outcome.FOUND, hard, 1)
    mags = np.abs(llr)
    order = np.argsort(mags, kind="stable")
    lam = mags[order].tolist()
    pos = order.tolist()
    cols = code.col_syndromes
    if cols is None:
        stream = sgrand_pattern_stream(llr)
        next(stream)
        for t, positions in enumerate(stream, start=2):
            if t > T:
                break
            word = hard.copy()
            word[list(positions)] ^= 1
            if code.contains(word):
                return DecodeResult(Outcome.FOUND, word, t)
        return DecodeResult(Outcome.ABANDONED, None, T)
    csort = cols[order].tolist()
    n = len(lam)
    heap = [(lam[0], 1, (pos[0],), (1,), csort[0])]
    t = 1
    while heap and t < T:
        w, size, positions, ranks, synd = heapq.heappop(heap)
        t += 1
        if synd == s0:
            word = hard.copy()
            word[list(positions)] ^= 1
            return DecodeResult(Outcome.FOUND, word, t)
        top = ranks[-1]
        if top < n:
            grown = tuple(sorted(positions + (pos[top],)))
            heapq.heappush(heap, (w + lam[top], size + 1, grown, ranks + (top + 1,), synd ^ csort[top]))
            moved = tuple(sorted(tuple(q for q in positions if q != pos[top - 1]) + (pos[top],)))
            heapq.heappush(
                heap,
                (
                    w - lam[top - 1] + lam[top],
                    size,
                    moved,
                    ranks[:-1] + (top + 1,),
                    synd ^ csort[top - 1] ^ csort[top],
                ),
            )
    return DecodeResult(Outcome.ABANDONED, None, T)
