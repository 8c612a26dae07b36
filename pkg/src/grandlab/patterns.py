"""Rank-domain error patterns, weight functions, and schedule enumeration.

A pattern is a tuple of distinct ascending ranks in 1..n ("flip the bits
holding these reliability ranks"); the empty tuple flips nothing. A weight
function assigns each rank a nonnegative, nondecreasing weight, and a
schedule lists patterns in nondecreasing accumulated weight. Ties break by
smaller support first, then lexicographically smaller rank tuple, so every
schedule is a reproducible total order.

Enumeration is best-first over a successor tree ("append next rank" /
"increment largest rank"), reaching each pattern exactly once with memory
proportional to the emitted count, never 2^n.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import lsq_linear

from .errors import FileFormatError, InvalidParameterError

RankPattern = tuple[int, ...]


class WeightKind(enum.Enum):
    UNIT = "unit"
    RANK = "rank"
    CDF = "cdf"
    THREE_LINE = "3line"


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """Per-rank reliability weights; gamma[r-1] is the weight of rank r."""

    kind: WeightKind
    gamma: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=np.float64)
        if np.any(g < 0):
            raise InvalidParameterError("weights must be nonnegative")
        if np.any(np.diff(g) < 0):
            raise InvalidParameterError("weights must be nondecreasing in rank")
        object.__setattr__(self, "gamma", g)

    @property
    def n(self) -> int:
        return len(self.gamma)


def unit_weight_function(n: int) -> WeightFunction:
    return WeightFunction(WeightKind.UNIT, np.ones(n))


def rank_weight_function(n: int) -> WeightFunction:
    return WeightFunction(WeightKind.RANK, np.arange(1, n + 1, dtype=np.float64))


def cdf_weight_function(
    n: int, sigma: float, mc_samples: int, rng: np.random.Generator
) -> WeightFunction:
    """Weights = expected order statistics of |LLR| at noise level sigma.

    gamma[r-1] estimates E[r-th smallest of n i.i.d. |L|] with
    L = (2/sigma^2)(1 + sigma Z), by Monte Carlo; an isotonic pass keeps
    the output nondecreasing against sampling noise.
    """
    if mc_samples < 10**4:
        raise InvalidParameterError("cdf weights need mc_samples >= 1e4")
    if not sigma > 0:
        raise InvalidParameterError("sigma must be > 0")
    gamma = np.zeros(n)
    batch = max(1, min(mc_samples, 2 * 10**6 // max(n, 1)))
    done = 0
    while done < mc_samples:
        m = min(batch, mc_samples - done)
        llr = (2.0 / sigma**2) * (1.0 + sigma * rng.standard_normal((m, n)))
        gamma += np.sort(np.abs(llr), axis=1).sum(axis=0)
        done += m
    gamma /= mc_samples
    return WeightFunction(
        WeightKind.CDF,
        np.maximum.accumulate(gamma),
        params={"sigma": sigma, "mc_samples": mc_samples},
    )


def _three_line_curve(n: int, intercept: float, slopes, breakpoints) -> np.ndarray:
    r = np.arange(1, n + 1, dtype=np.float64)
    b1, b2 = breakpoints
    s1, s2, s3 = slopes
    return (
        intercept
        + s1 * np.minimum(r, b1)
        + s2 * np.clip(r - b1, 0.0, b2 - b1)
        + s3 * np.maximum(r - b2, 0.0)
    )


def three_line_weight_function(
    n: int,
    segments=None,
    *,
    intercept: float = 0.0,
    fit_to: WeightFunction | None = None,
    sigma: float | None = None,
    mc_samples: int = 10**5,
    rng: np.random.Generator | None = None,
) -> WeightFunction:
    """Continuous piecewise-linear weights with three segments.

    Explicit form: segments = [(slope1, b1), (slope2, b2), (slope3, n)] with
    ascending breakpoints and nonnegative slopes. Default form: least-squares
    fit to a CDF weight curve (given via fit_to, or computed from sigma),
    searching breakpoints on a coarse grid with slopes constrained >= 0.
    """
    if segments is not None:
        slopes = [s for s, _ in segments]
        brks = [b for _, b in segments]
        if len(segments) != 3:
            raise InvalidParameterError("need exactly 3 (slope, breakpoint) segments")
        if any(s < 0 for s in slopes) or intercept < 0:
            raise InvalidParameterError("slopes and intercept must be nonnegative")
        if not (1 <= brks[0] <= brks[1] <= brks[2] <= n):
            raise InvalidParameterError("breakpoints must ascend within 1..n")
        gamma = _three_line_curve(n, intercept, slopes, brks[:2])
        return WeightFunction(
            WeightKind.THREE_LINE,
            gamma,
            params={"intercept": intercept, "slopes": tuple(slopes), "breakpoints": tuple(brks)},
        )

    if fit_to is None:
        if sigma is None:
            raise InvalidParameterError("default fit needs fit_to= or sigma=")
        fit_to = cdf_weight_function(n, sigma, mc_samples, rng or np.random.default_rng(0))
    target = fit_to.gamma
    r = np.arange(1, n + 1, dtype=np.float64)
    grid = sorted(set(np.linspace(2, n - 1, num=min(14, max(2, n - 2))).astype(int).tolist()))
    best = None
    for i, b1 in enumerate(grid):
        for b2 in grid[i:]:
            basis = np.column_stack(
                [np.ones(n), np.minimum(r, b1), np.clip(r - b1, 0, b2 - b1), np.maximum(r - b2, 0)]
            )
            res = lsq_linear(basis, target, bounds=(0.0, np.inf))
            sse = float(np.sum((basis @ res.x - target) ** 2))
            if best is None or sse < best[0]:
                best = (sse, res.x, (b1, b2))
    sse, coef, (b1, b2) = best
    gamma = _three_line_curve(n, coef[0], coef[1:], (b1, b2))
    return WeightFunction(
        WeightKind.THREE_LINE,
        gamma,
        params={
            "intercept": float(coef[0]),
            "slopes": tuple(float(c) for c in coef[1:]),
            "breakpoints": (int(b1), int(b2), n),
            "fit_sse": sse,
        },
    )


def validate_pattern(p: RankPattern, n: int) -> None:
    if any(not (1 <= r <= n) for r in p):
        raise InvalidParameterError(f"pattern {p} has ranks outside 1..{n}")
    if any(p[i] >= p[i + 1] for i in range(len(p) - 1)):
        raise InvalidParameterError(f"pattern {p} is not strictly ascending")


def accumulated_weight(p: RankPattern, wf: WeightFunction) -> float:
    """Sum of the pattern's per-rank weights (exactly rounded, order-free)."""
    return math.fsum(wf.gamma[r - 1] for r in p)


def logistic_weight(p: RankPattern) -> int:
    """Integer sum of the ranks in the pattern's support."""
    return sum(p)


def patterns_at_logistic_weight(w: int, n: int) -> list[RankPattern]:
    """All partitions of w into distinct parts <= n, in schedule tie order."""
    if w < 0:
        raise InvalidParameterError("weight must be nonnegative")
    out: list[RankPattern] = []

    def rec(remaining: int, min_part: int, acc: list[int]):
        if remaining == 0:
            out.append(tuple(acc))
            return
        for part in range(min_part, min(remaining, n) + 1):
            # the tail must fit strictly larger parts summing to remaining-part
            rest = remaining - part
            if rest and rest <= part:
                continue
            acc.append(part)
            rec(rest, part + 1, acc)
            acc.pop()

    rec(w, 1, [])
    out.sort(key=lambda p: (len(p), p))
    return out


def enumerate_schedule(wf: WeightFunction, n: int, count: int) -> "Schedule":
    """First `count` patterns in nondecreasing accumulated weight.

    Best-first search over the successor tree; for a nondecreasing
    nonnegative gamma both successors weigh at least their parent, so a heap
    emits patterns in global order without materializing the whole space.
    """
    if wf.n != n:
        raise InvalidParameterError(f"weight function is for n={wf.n}, not {n}")
    if n <= 0:
        raise InvalidParameterError("n must be positive")
    if not (1 <= count <= (1 << n)):
        raise InvalidParameterError(f"count must be in [1, 2^{n}], got {count}")
    gamma = wf.gamma
    heap: list[tuple[float, int, RankPattern]] = [(0.0, 0, ())]
    patterns: list[RankPattern] = []
    while len(patterns) < count:
        w, size, p = heapq.heappop(heap)
        patterns.append(p)
        top = p[-1] if p else 0
        if top < n:
            appended = p + (top + 1,)
            heapq.heappush(heap, (accumulated_weight(appended, wf), size + 1, appended))
            if p:
                bumped = p[:-1] + (top + 1,)
                heapq.heappush(heap, (accumulated_weight(bumped, wf), size, bumped))
    return Schedule(patterns=patterns, n=n, weight_kind=wf.kind.value)


@dataclass(eq=False)
class Schedule:
    """An ordered list of rank patterns (an ORB-type ordering policy)."""

    patterns: list[RankPattern]
    n: int
    weight_kind: str = "unknown"
    _compiled: tuple[np.ndarray, np.ndarray] | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if not self.patterns or self.patterns[0] != ():
            raise InvalidParameterError("a schedule must start with the empty pattern")
        for p in self.patterns:
            validate_pattern(p, self.n)
        if len(set(self.patterns)) != len(self.patterns):
            raise InvalidParameterError("schedule contains duplicate patterns")

    @property
    def length(self) -> int:
        return len(self.patterns)

    def compiled(self) -> tuple[np.ndarray, np.ndarray]:
        """Flat (rank-1) indices and per-pattern offsets for the nonempty tail.

        Patterns 2..length flattened: flat holds 0-based rank indices, and
        offsets[j] is where pattern j+2 starts; both arrays feed the
        vectorized decode / posterior paths.
        """
        if self._compiled is None:
            tail = self.patterns[1:]
            flat = np.fromiter(
                (r - 1 for p in tail for r in p),
                dtype=np.int32,
                count=sum(len(p) for p in tail),
            )
            offsets = np.zeros(len(tail), dtype=np.int64)
            if len(tail) > 1:
                np.cumsum([len(p) for p in tail[:-1]], out=offsets[1:])
            self._compiled = (flat, offsets)
        return self._compiled

    def truncated(self, count: int) -> "Schedule":
        if not (1 <= count <= self.length):
            raise InvalidParameterError(f"cannot truncate length-{self.length} schedule to {count}")
        return Schedule(patterns=self.patterns[:count], n=self.n, weight_kind=self.weight_kind)


def save_schedule(s: Schedule, path) -> None:
    """Write `SCHED v1 n=.. count=.. kind=..` plus one pattern per line ('-' = empty)."""
    with open(path, "w") as fh:
        fh.write(f"SCHED v1 n={s.n} count={s.length} kind={s.weight_kind}\n")
        for p in s.patterns:
            fh.write(" ".join(map(str, p)) + "\n" if p else "-\n")


def load_schedule(path) -> Schedule:
    with open(path) as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 5 or parts[0] != "SCHED" or parts[1] != "v1":
            raise FileFormatError(f"malformed schedule header: {header.strip()!r}")
        try:
            fields = dict(tok.split("=", 1) for tok in parts[2:])
            n, count, kind = int(fields["n"]), int(fields["count"]), fields["kind"]
        except (KeyError, ValueError):
            raise FileFormatError(f"malformed schedule header: {header.strip()!r}") from None
        patterns: list[RankPattern] = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line == "-":
                patterns.append(())
                continue
            try:
                ranks = tuple(int(t) for t in line.split())
            except ValueError:
                raise FileFormatError(f"bad pattern line: {line!r}") from None
            if any(not (1 <= r <= n) for r in ranks):
                raise FileFormatError(f"rank out of range 1..{n} in pattern line: {line!r}")
            patterns.append(ranks)
    if len(patterns) != count:
        raise FileFormatError(f"schedule file has {len(patterns)} patterns, header says {count}")
    try:
        return Schedule(patterns=patterns, n=n, weight_kind=kind)
    except InvalidParameterError as exc:
        raise FileFormatError(str(exc)) from None
