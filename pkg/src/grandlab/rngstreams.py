"""Named, reproducible RNG substreams.

All randomness in the package is derived from a single integer seed via
(seed, purpose-label, index) triples, so any component can be re-run in
isolation and parallel workers stay deterministic: the stream a consumer
gets never depends on scheduling, only on its label and index.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_entropy(label: str) -> int:
    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "big")


def substream(seed: int, label: str, index: int = 0) -> np.random.Generator:
    """Generator for the (seed, label, index) substream."""
    ss = np.random.SeedSequence(entropy=(int(seed), _label_entropy(label), int(index)))
    return np.random.default_rng(ss)


def snr_tag(snr_db: float) -> int:
    """Stable integer tag for an SNR point (milli-dB), for use as a stream index."""
    return int(round(float(snr_db) * 1000.0))
