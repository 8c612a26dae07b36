"""BPSK over AWGN: modulation, LLRs, hard decisions, flip probabilities.

Bits map to symbols as 0 -> +1, 1 -> -1. The channel adds i.i.d. Gaussian
noise with standard deviation sigma, and the per-bit LLR of the output is
2*y/sigma^2. Everything here is pure given an explicit RNG stream.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import InvalidParameterError


class SnrConvention(enum.Enum):
    """How an operating point in dB maps to the noise level sigma."""

    SNR_PER_SYMBOL = "per_symbol"
    EBN0_RATE_ADJUSTED = "ebn0"


def sigma_from_snr(snr_db: float, rate: float, convention: SnrConvention) -> float:
    """Noise standard deviation for an operating point.

    SNR_PER_SYMBOL treats the dB value as Es/N0 with unit symbol energy
    (sigma^2 = 10^(-snr/10)); EBN0_RATE_ADJUSTED treats it as Eb/N0 and
    folds in the code rate (sigma^2 = 1 / (2 * rate * 10^(snr/10))).
    """
    if not (0.0 < rate <= 1.0):
        raise InvalidParameterError(f"rate must be in (0, 1], got {rate}")
    lin = 10.0 ** (float(snr_db) / 10.0)
    if convention is SnrConvention.SNR_PER_SYMBOL:
        return math.sqrt(1.0 / lin)
    return math.sqrt(1.0 / (2.0 * rate * lin))


@dataclass(frozen=True)
class ChannelParams:
    """Operating point of the BPSK/AWGN channel."""

    sigma: float
    snr_db: float = float("nan")
    convention: SnrConvention = SnrConvention.SNR_PER_SYMBOL

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise InvalidParameterError(f"sigma must be > 0, got {self.sigma}")

    @classmethod
    def from_snr(
        cls,
        snr_db: float,
        rate: float = 1.0,
        convention: SnrConvention = SnrConvention.SNR_PER_SYMBOL,
    ) -> "ChannelParams":
        return cls(sigma=sigma_from_snr(snr_db, rate, convention), snr_db=snr_db, convention=convention)


def modulate_bpsk(w: np.ndarray) -> np.ndarray:
    """Map bits to symbols: 0 -> +1, 1 -> -1."""
    w = np.asarray(w)
    return 1.0 - 2.0 * w.astype(np.float64)


def transmit(x: np.ndarray, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """Add white Gaussian noise at the operating point; deterministic given the stream."""
    x = np.asarray(x, dtype=np.float64)
    return x + params.sigma * rng.standard_normal(x.shape)


def compute_llr(y: np.ndarray, sigma: float) -> np.ndarray:
    """Per-bit LLR of the channel output: 2*y/sigma^2."""
    if not sigma > 0.0:
        raise InvalidParameterError(f"sigma must be > 0, got {sigma}")
    return (2.0 / (sigma * sigma)) * np.asarray(y, dtype=np.float64)


def hard_decision(y: np.ndarray) -> np.ndarray:
    """Bitwise hard decision: bit is 0 iff y >= 0 (the boundary maps to 0)."""
    return (np.asarray(y) < 0).astype(np.uint8)


def flip_probability(abs_llr):
    """Probability that the hard decision flipped a bit, given its |LLR|.

    Equals 1/(1 + exp(|llr|)), evaluated as expit(-|llr|) so large inputs
    underflow gracefully instead of overflowing.
    """
    a = np.asarray(abs_llr, dtype=np.float64)
    if np.any(a < 0):
        raise InvalidParameterError("abs_llr must be nonnegative")
    out = expit(-a)
    if np.ndim(abs_llr) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class SoftObservation:
    """A channel output with its LLRs and the rank structure of |LLR|.

    rank_of[i] is the 1-based rank of |llr[i]| among all magnitudes
    (ascending, ties broken by ascending position), and abs_llr_sorted
    lists the magnitudes in that rank order.
    """

    y: np.ndarray
    llr: np.ndarray
    abs_llr_sorted: np.ndarray
    rank_of: np.ndarray = field(repr=False)

    @classmethod
    def from_channel_output(cls, y: np.ndarray, sigma: float) -> "SoftObservation":
        y = np.asarray(y, dtype=np.float64)
        llr = compute_llr(y, sigma)
        mags = np.abs(llr)
        order = np.argsort(mags, kind="stable")
        rank_of = np.empty(len(y), dtype=np.int64)
        rank_of[order] = np.arange(1, len(y) + 1)
        return cls(y=y, llr=llr, abs_llr_sorted=mags[order], rank_of=rank_of)
