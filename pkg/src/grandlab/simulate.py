"""Monte Carlo BLER and average-query benchmarking over SNR sweeps.

Each trial draws a fresh codeword, transmits it over the AWGN channel and
decodes; a block error is an abandoned decode or a found codeword that
differs from the transmitted one (the ML-lower-bound mode instead counts
only found-but-wrong, treating truncation as optimistically correct).
Per-trial RNG streams are derived from (seed, snr point, trial index), so
results are reproducible and independent of the worker count; early
stopping truncates at the exact trial where the error target is met.
"""

from __future__ import annotations

import hashlib
import json
import math
import multiprocessing as mp
import time
from dataclasses import asdict, dataclass

import numpy as np

from .channel import SnrConvention, sigma_from_snr
from .decoder import OrderingPolicy, decode, sgrand_policy, static_policy
from .errors import InvalidParameterError
from .patterns import Schedule
from .rngstreams import _label_entropy, snr_tag

_TRIAL_CHUNK = 1024


@dataclass(frozen=True)
class DecoderSetup:
    """A named decoder: either a static schedule or the online SGRAND policy."""

    name: str
    kind: str  # "static" | "sgrand"
    schedule: Schedule | None = None

    def policy(self, T: int) -> OrderingPolicy:
        if self.kind == "sgrand":
            return sgrand_policy(T)
        if self.kind == "static":
            if self.schedule is None:
                raise InvalidParameterError("static decoder needs a schedule")
            return static_policy(self.schedule, T)
        raise InvalidParameterError(f"unknown decoder kind {self.kind!r}")


@dataclass(frozen=True)
class SimConfig:
    code_spec: str
    decoder_name: str
    snr_db_list: tuple[float, ...]
    convention: SnrConvention = SnrConvention.SNR_PER_SYMBOL
    T: int = 10**4
    max_trials: int = 10**6
    min_block_errors: int = 100
    seed: int = 0
    workers: int = 1
    mode: str = "standard"  # "standard" | "ml_lower_bound"

    def __post_init__(self):
        if self.T < 1:
            raise InvalidParameterError("T must be >= 1")
        if self.min_block_errors < 1:
            raise InvalidParameterError("min_block_errors must be >= 1")
        if self.max_trials < 1:
            raise InvalidParameterError("max_trials must be >= 1")
        if not self.snr_db_list:
            raise InvalidParameterError("need at least one SNR point")
        if self.mode not in ("standard", "ml_lower_bound"):
            raise InvalidParameterError(f"unknown mode {self.mode!r}")
        object.__setattr__(self, "snr_db_list", tuple(float(s) for s in self.snr_db_list))

    def echo(self) -> dict:
        d = asdict(self)
        d["convention"] = self.convention.value
        return d


@dataclass(frozen=True)
class SimRecord:
    snr_db: float
    trials: int
    block_errors: int
    bler: float
    avg_queries: float
    abandon_rate: float
    wall_seconds: float
    ci95_bler: float
    found_wrong: int = 0
    abandoned: int = 0
    avg_queries_se: float = 0.0

    CSV_HEADER = "snr_db,trials,block_errors,bler,avg_queries,abandon_rate,ci95"

    def csv_row(self) -> str:
        return (
            f"{self.snr_db:g},{self.trials},{self.block_errors},{self.bler:.8g},"
            f"{self.avg_queries:.8g},{self.abandon_rate:.8g},{self.ci95_bler:.8g}"
        )


# Worker-side state for forked pools; also used by the inline path.
_WORK = {}


def _init_worker(code, decoder: DecoderSetup, config: SimConfig, sigma: float, label_ent: int):
    encode, width = _encoder_for(code)
    _WORK.update(
        code=code,
        policy=decoder.policy(config.T),
        config=config,
        sigma=sigma,
        label_ent=label_ent,
        encode=encode,
        width=width,
    )


def _encoder_for(code):
    # CRC-aided polar encodes through its equivalent linear form (same map,
    # much cheaper per trial than the bit-serial CRC).
    if hasattr(code, "equivalent_linear"):
        lin = code.equivalent_linear()
        return lin.encode, lin.k
    return code.encode, code.k


def _run_chunk(bounds: tuple[int, int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    start, stop = bounds
    code = _WORK["code"]
    policy = _WORK["policy"]
    config: SimConfig = _WORK["config"]
    sigma = _WORK["sigma"]
    encode = _WORK["encode"]
    width = _WORK["width"]
    lower_bound = config.mode == "ml_lower_bound"
    m = stop - start
    is_err = np.zeros(m, dtype=bool)
    queries = np.zeros(m, dtype=np.int32)
    abandoned = np.zeros(m, dtype=bool)
    for j in range(m):
        trial = start + j
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=(config.seed, _WORK["label_ent"], trial))
        )
        word = encode(rng.integers(0, 2, size=width, dtype=np.uint8))
        y = (1.0 - 2.0 * word) + sigma * rng.standard_normal(code.n)
        res = decode(y, code, policy, sigma)
        queries[j] = res.queries_used
        if res.found:
            wrong = not np.array_equal(res.codeword, word)
            is_err[j] = wrong
        else:
            abandoned[j] = True
            is_err[j] = not lower_bound
    return is_err, queries, abandoned


def run_point(code, decoder: DecoderSetup, config: SimConfig, snr_db: float) -> SimRecord:
    """Simulate one SNR point until max_trials or min_block_errors, whichever first."""
    if config.mode == "ml_lower_bound":
        if decoder.kind != "sgrand" or config.T != 10**5:
            raise InvalidParameterError("ml_lower_bound requires the SGRAND decoder and T = 1e5")
    sigma = sigma_from_snr(snr_db, _rate_of(code), config.convention)
    label_ent = _label_entropy(f"sim-trial-{snr_tag(snr_db)}")
    t0 = time.perf_counter()
    chunks = [
        (s, min(s + _TRIAL_CHUNK, config.max_trials))
        for s in range(0, config.max_trials, _TRIAL_CHUNK)
    ]
    err_parts, query_parts, abandon_parts = [], [], []
    total_err = 0
    if config.workers <= 1:
        _init_worker(code, decoder, config, sigma, label_ent)
        for bounds in chunks:
            e, q, a = _run_chunk(bounds)
            err_parts.append(e)
            query_parts.append(q)
            abandon_parts.append(a)
            total_err += int(e.sum())
            if total_err >= config.min_block_errors:
                break
    else:
        ctx = mp.get_context("fork")
        with ctx.Pool(
            processes=config.workers,
            initializer=_init_worker,
            initargs=(code, decoder, config, sigma, label_ent),
        ) as pool:
            for e, q, a in pool.imap(_run_chunk, chunks):
                err_parts.append(e)
                query_parts.append(q)
                abandon_parts.append(a)
                total_err += int(e.sum())
                if total_err >= config.min_block_errors:
                    pool.terminate()
                    break
    is_err = np.concatenate(err_parts)
    queries = np.concatenate(query_parts).astype(np.float64)
    abandoned = np.concatenate(abandon_parts)
    cum = np.cumsum(is_err)
    hit = np.nonzero(cum >= config.min_block_errors)[0]
    stop = int(hit[0]) + 1 if hit.size else len(is_err)
    is_err, queries, abandoned = is_err[:stop], queries[:stop], abandoned[:stop]
    trials = stop
    errors = int(is_err.sum())
    bler = errors / trials
    q_mean = float(queries.mean())
    q_se = float(queries.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return SimRecord(
        snr_db=float(snr_db),
        trials=trials,
        block_errors=errors,
        bler=bler,
        avg_queries=q_mean,
        abandon_rate=float(abandoned.mean()),
        wall_seconds=time.perf_counter() - t0,
        ci95_bler=1.96 * math.sqrt(max(bler * (1.0 - bler), 0.0) / trials),
        found_wrong=errors - int((is_err & abandoned).sum()),
        abandoned=int(abandoned.sum()),
        avg_queries_se=q_se,
    )


def _rate_of(code) -> float:
    return code.k / code.n


def run_sweep(
    code,
    decoder: DecoderSetup,
    config: SimConfig,
    csv_path=None,
    manifest_path=None,
    input_files=(),
) -> list[SimRecord]:
    """One record per SNR point, optionally emitting the CSV and run manifest."""
    records = [run_point(code, decoder, config, snr) for snr in config.snr_db_list]
    if csv_path is not None:
        write_records_csv(records, csv_path)
    if manifest_path is not None:
        write_manifest(manifest_path, config, input_files, csv_path)
    return records


def run_ml_lower_bound(code, decoder: DecoderSetup, config: SimConfig, **kw) -> list[SimRecord]:
    """SGRAND T=1e5 sweep counting only found-but-wrong decodes as errors."""
    if config.mode != "ml_lower_bound":
        raise InvalidParameterError("config.mode must be 'ml_lower_bound'")
    return run_sweep(code, decoder, config, **kw)


def write_records_csv(records, path) -> None:
    with open(path, "w") as fh:
        fh.write(SimRecord.CSV_HEADER + "\n")
        for rec in records:
            fh.write(rec.csv_row() + "\n")


def read_records_csv(path) -> list[dict]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        return [dict(zip(header, (float(x) for x in ln.split(",")))) for ln in fh if ln.strip()]


def gitlike_blob_sha1(path) -> str:
    """sha1 of 'blob <len>\\0' + content, matching git's object hash."""
    with open(path, "rb") as fh:
        data = fh.read()
    h = hashlib.sha1()
    h.update(f"blob {len(data)}\0".encode())
    h.update(data)
    return h.hexdigest()


def write_manifest(path, config: SimConfig, input_files=(), csv_path=None) -> None:
    manifest = {
        "config": config.echo(),
        "inputs": {str(p): gitlike_blob_sha1(p) for p in input_files},
        "csv": str(csv_path) if csv_path is not None else None,
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
