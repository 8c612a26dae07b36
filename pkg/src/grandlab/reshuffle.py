"""Offline query reshuffling: sort a base schedule by mean posterior mass.

Given a base ORB-type schedule, estimate by Monte Carlo the mean posterior
probability that the t-th queried pattern is the true error pattern
(conditioning on the +1 symbol; |LLR| is sign-symmetric under equiprobable
BPSK), then permute the schedule so those means are descending. The
permutation is independent of any particular channel output, so the result
is again an ORB-type schedule.

Also provides the excess-query diagnostics: the pairwise inversion form
and the rank-difference form of the expected extra queries versus the
per-realization descending (SGRAND) order, and the pairwise-inversion
matrix whose lower-triangular sum is that excess.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_expit

from .errors import FileFormatError, InvalidParameterError
from .patterns import RankPattern, Schedule
from .rngstreams import substream

_SAMPLE_CHUNK = 2048
_PAIRWISE_BRUTE_MAX = 4096


@dataclass(frozen=True)
class PosteriorSample:
    """One channel realization: sorted |LLR| magnitudes and per-pattern posteriors."""

    sorted_abs_llr: np.ndarray
    s: np.ndarray


def posterior_s(sorted_abs_llr: np.ndarray, p: RankPattern) -> float:
    """Posterior probability that the rank-domain pattern p is the true one.

    Product over flipped ranks of 1/(1+e^lam) and unflipped ranks of
    e^lam/(1+e^lam); accumulated in log domain so nothing underflows for
    n <= 128 at moderate noise levels.
    """
    lam = np.asarray(sorted_abs_llr, dtype=np.float64)
    flipped = np.zeros(len(lam), dtype=bool)
    for r in p:
        flipped[r - 1] = True
    logs = np.where(flipped, log_expit(-lam), log_expit(lam))
    return float(math.exp(math.fsum(logs.tolist())))


def log_posterior_base(lam: np.ndarray) -> float:
    """Log posterior of the empty pattern: sum of log keep-probabilities."""
    return float(np.sum(log_expit(np.asarray(lam, dtype=np.float64))))


def schedule_posteriors(lam: np.ndarray, schedule: Schedule, upto: int | None = None) -> np.ndarray:
    """Posterior of each of the first `upto` schedule patterns, vectorized.

    Uses s(p) = s(empty) * exp(-sum of lam over p), the same cancellation
    that makes descending posterior equivalent to ascending |LLR| sums.
    """
    lam = np.asarray(lam, dtype=np.float64)
    count = schedule.length if upto is None else min(upto, schedule.length)
    base = log_posterior_base(lam)
    flat, offsets = schedule.compiled()
    out = np.empty(count)
    out[0] = math.exp(base)
    if count > 1:
        hi = offsets[count - 1] if count - 1 < len(offsets) else len(flat)
        sums = np.add.reduceat(lam[flat[:hi]], offsets[: count - 1])
        out[1:] = np.exp(base - sums)
    return out


def draw_sorted_abs_llr(n: int, sigma: float, rng: np.random.Generator, m: int = 1) -> np.ndarray:
    """m rows of ascending |LLR| magnitudes for Y ~ N(+1, sigma^2)."""
    y = 1.0 + sigma * rng.standard_normal((m, n))
    return np.sort(np.abs((2.0 / sigma**2) * y), axis=1)


def iter_sample_chunks(n: int, sigma: float, mc_samples: int, seed: int, label: str = "posterior-mc"):
    """Deterministic sample chunks; chunk boundaries never depend on workers."""
    done = 0
    idx = 0
    while done < mc_samples:
        m = min(_SAMPLE_CHUNK, mc_samples - done)
        yield draw_sorted_abs_llr(n, sigma, substream(seed, label, idx), m)
        done += m
        idx += 1


def estimate_mean_posteriors(
    base: Schedule,
    sigma: float,
    mc_samples: int,
    seed: int,
    upto: int | None = None,
) -> np.ndarray:
    """Monte Carlo estimate of the mean posterior of each scheduled pattern.

    Deterministic given the seed: samples are drawn in fixed-size chunks
    from named substreams and reduced in chunk order.
    """
    if mc_samples < 1:
        raise InvalidParameterError("mc_samples must be >= 1")
    count = base.length if upto is None else min(upto, base.length)
    acc = np.zeros(count)
    for lam_rows in iter_sample_chunks(base.n, sigma, mc_samples, seed):
        for lam in lam_rows:
            acc += schedule_posteriors(lam, base, upto=count)
    return acc / mc_samples


@dataclass(eq=False)
class ReshuffleModel:
    """A trained reshuffle: base schedule, mean posteriors, and the permutation."""

    base: Schedule
    pi_tilde: np.ndarray  # 0-based: reshuffled[j] = base[pi_tilde[j]]
    meta: dict = field(default_factory=dict)
    mean_s: np.ndarray | None = None
    _reshuffled: Schedule | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.pi_tilde = np.asarray(self.pi_tilde, dtype=np.int64)
        if sorted(self.pi_tilde.tolist()) != list(range(self.base.length)):
            raise InvalidParameterError("pi_tilde is not a permutation of the base indices")

    @property
    def reshuffled_patterns(self) -> list[RankPattern]:
        return [self.base.patterns[j] for j in self.pi_tilde]

    @property
    def reshuffled(self) -> Schedule:
        """The base schedule in reshuffled order, as a decodable Schedule.

        For any posterior-derived mean_s the empty pattern keeps rank one
        (its posterior dominates every realization), so the schedule
        invariant holds; synthetic mean vectors that demote it are rejected
        here and can use reshuffled_patterns instead.
        """
        if self._reshuffled is None:
            self._reshuffled = Schedule(
                patterns=self.reshuffled_patterns,
                n=self.base.n,
                weight_kind=f"rs-{self.base.weight_kind}",
            )
        return self._reshuffled


def reshuffle_schedule(base: Schedule, mean_s: np.ndarray, meta: dict | None = None) -> ReshuffleModel:
    """Stable argsort of the mean posteriors, descending; ties keep base order."""
    mean_s = np.asarray(mean_s, dtype=np.float64)
    if len(mean_s) != base.length:
        raise InvalidParameterError(
            f"mean_s has {len(mean_s)} entries for a length-{base.length} schedule"
        )
    pi = np.argsort(-mean_s, kind="stable")
    return ReshuffleModel(base=base, pi_tilde=pi, meta=dict(meta or {}), mean_s=mean_s)


def train_reshuffle(base: Schedule, sigma: float, mc_samples: int, seed: int) -> ReshuffleModel:
    mean_s = estimate_mean_posteriors(base, sigma, mc_samples, seed)
    meta = {"sigma_design": sigma, "mc_samples": mc_samples, "seed": seed}
    return reshuffle_schedule(base, mean_s, meta)


def _as_s_matrix(samples) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        mat = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    else:
        rows = [smp.s if isinstance(smp, PosteriorSample) else np.asarray(smp) for smp in samples]
        if not rows:
            raise InvalidParameterError("need at least one posterior sample")
        mat = np.vstack([np.asarray(r, dtype=np.float64) for r in rows])
    if mat.size == 0:
        raise InvalidParameterError("need at least one posterior sample")
    return mat


def pairwise_excess(s: np.ndarray) -> float:
    """Sum over inverted pairs i<j with s_i < s_j of (s_j - s_i)."""
    s = np.asarray(s, dtype=np.float64)
    if len(s) > _PAIRWISE_BRUTE_MAX:
        raise InvalidParameterError(
            f"pairwise form is quadratic; use rank_excess beyond {_PAIRWISE_BRUTE_MAX} entries"
        )
    d = s[None, :] - s[:, None]  # d[i, j] = s_j - s_i
    return float(np.sum(np.triu(np.maximum(d, 0.0), k=1)))


def rank_excess(s: np.ndarray) -> float:
    """Same quantity via the rearrangement identity: sum of t*(s_t - sorted_desc_t)."""
    s = np.asarray(s, dtype=np.float64)
    t = np.arange(1, len(s) + 1, dtype=np.float64)
    return float(t @ s - t @ np.sort(s)[::-1])


@dataclass(frozen=True)
class ExcessQueryEstimate:
    pairwise: float
    rank_based: float
    per_sample_pairwise: np.ndarray
    per_sample_rank: np.ndarray


def excess_queries_estimate(samples) -> ExcessQueryEstimate:
    """Expected excess queries versus the per-realization descending order.

    Returns both the pairwise-inversion form and the rank-difference form;
    they agree per sample up to floating error (the rearrangement identity),
    which callers assert at their chosen tolerance.
    """
    mat = _as_s_matrix(samples)
    pw = np.array([pairwise_excess(row) for row in mat])
    rk = np.array([rank_excess(row) for row in mat])
    return ExcessQueryEstimate(
        pairwise=float(pw.mean()),
        rank_based=float(rk.mean()),
        per_sample_pairwise=pw,
        per_sample_rank=rk,
    )


def evaluate_delta_q(
    schedule: Schedule,
    sigma: float,
    mc_samples: int,
    seed: int,
    upto: int | None = None,
) -> tuple[float, float]:
    """(mean excess queries, mean expected queries) of a schedule prefix.

    Uses the rank-difference form per sample, which is exactly the pairwise
    form by the rearrangement identity but costs T log T instead of T^2;
    suitable for held-out evaluation at full schedule length.
    """
    count = schedule.length if upto is None else min(upto, schedule.length)
    t = np.arange(1, count + 1, dtype=np.float64)
    acc_dq = 0.0
    acc_q = 0.0
    for lam_rows in iter_sample_chunks(schedule.n, sigma, mc_samples, seed, label="delta-q"):
        for lam in lam_rows:
            s = schedule_posteriors(lam, schedule, upto=count)
            q = float(t @ s)
            acc_q += q
            acc_dq += q - float(t @ np.sort(s)[::-1])
    return acc_dq / mc_samples, acc_q / mc_samples


@dataclass(frozen=True)
class RMatrix:
    """Pairwise expected posterior-inversion magnitudes for the first K patterns."""

    raw: np.ndarray
    normalized: np.ndarray

    @property
    def k(self) -> int:
        return self.raw.shape[0]


class RMatrixAccumulator:
    """Streaming mean of (s_j - s_i)+ over posterior samples, k x k window."""

    def __init__(self, k: int):
        if k < 1:
            raise InvalidParameterError("k must be >= 1")
        self.k = k
        self._raw_sum = np.zeros((k, k))
        self._buf = np.empty((k, k))
        self.count = 0

    def add(self, s: np.ndarray) -> None:
        s = np.asarray(s, dtype=np.float64)[: self.k]
        if len(s) != self.k:
            raise InvalidParameterError(f"sample has {len(s)} entries, need >= k={self.k}")
        np.subtract(s[:, None], s[None, :], out=self._buf)  # buf[j, i] = s_j - s_i
        np.maximum(self._buf, 0.0, out=self._buf)
        self._raw_sum += self._buf
        self.count += 1

    def finalize(self) -> RMatrix:
        if self.count == 0:
            raise InvalidParameterError("no samples accumulated")
        raw = self._raw_sum / self.count
        denom = raw + raw.T
        with np.errstate(invalid="ignore", divide="ignore"):
            normalized = np.where(denom > 0, raw / np.where(denom > 0, denom, 1.0), 0.5)
        return RMatrix(raw=raw, normalized=normalized)


def r_matrix(samples, k: int | None = None) -> RMatrix:
    """raw[j, i] = mean over samples of (s_j - s_i)+, zero diagonal.

    normalized[j, i] = raw[j, i] / (raw[j, i] + raw[i, j]), with 0/0 -> 0.5
    (grayscale convention; 0.5 everywhere for degenerate identical samples).
    """
    mat = _as_s_matrix(samples)
    if k is not None and k > mat.shape[1]:
        raise InvalidParameterError(f"k={k} exceeds sample width {mat.shape[1]}")
    acc = RMatrixAccumulator(mat.shape[1] if k is None else k)
    for row in mat:
        acc.add(row)
    return acc.finalize()


def export_rmatrix(m: RMatrix, path, fmt: str = "csv") -> None:
    """csv: K rows of 6-decimal normalized values; pgm: 8-bit grayscale P5."""
    if fmt == "csv":
        with open(path, "w") as fh:
            for row in m.normalized:
                fh.write(",".join(f"{v:.6f}" for v in row) + "\n")
    elif fmt == "pgm":
        pixels = np.floor(255.0 * m.normalized + 0.5).astype(np.uint8)  # round half up
        with open(path, "wb") as fh:
            fh.write(f"P5\n{m.k} {m.k}\n255\n".encode())
            fh.write(pixels.tobytes())
    else:
        raise InvalidParameterError(f"unknown format {fmt!r}")


def save_reshuffle_model(model: ReshuffleModel, path, base_ref: str = "-") -> None:
    """Header `RSOG v1 n=.. T1=.. sigma=.. samples=.. seed=.. base=..`, then pi entries.

    pi entries are 1-based base-schedule indices, one per line; the base
    schedule itself lives in its own file and is re-attached at load time.
    """
    meta = model.meta
    sigma = meta.get("sigma_design", float("nan"))
    samples = meta.get("mc_samples", 0)
    seed = meta.get("seed", 0)
    with open(path, "w") as fh:
        fh.write(
            f"RSOG v1 n={model.base.n} T1={model.base.length} sigma={sigma!r} "
            f"samples={samples} seed={seed} base={base_ref}\n"
        )
        for j in model.pi_tilde:
            fh.write(f"{j + 1}\n")


def load_reshuffle_model(path, base: Schedule) -> ReshuffleModel:
    with open(path) as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) < 2 or parts[0] != "RSOG" or parts[1] != "v1":
            raise FileFormatError(f"malformed model header: {header.strip()!r}")
        try:
            fields = dict(tok.split("=", 1) for tok in parts[2:])
            n = int(fields["n"])
            t1 = int(fields["T1"])
            meta = {
                "sigma_design": float(fields["sigma"]),
                "mc_samples": int(fields["samples"]),
                "seed": int(fields["seed"]),
                "base_ref": fields.get("base", "-"),
            }
        except (KeyError, ValueError):
            raise FileFormatError(f"malformed model header: {header.strip()!r}") from None
        entries = []
        for line in fh:
            line = line.strip()
            if line:
                try:
                    entries.append(int(line) - 1)
                except ValueError:
                    raise FileFormatError(f"bad pi entry: {line!r}") from None
    if base.n != n or base.length != t1:
        raise InvalidParameterError(
            f"model was trained for n={n}, T1={t1}; got base with n={base.n}, length={base.length}"
        )
    if len(entries) != t1:
        raise FileFormatError(f"model file has {len(entries)} entries, header says {t1}")
    return ReshuffleModel(base=base, pi_tilde=np.asarray(entries), meta=meta)
