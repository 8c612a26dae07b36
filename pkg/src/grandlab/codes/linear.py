"""Generic binary linear codes via generator / parity-check matrices.

Membership testing is the decoder's hot path, so each code precomputes its
parity-check columns packed into uint64 words (one word per position when
n-k <= 64). The packed route must stay bit-exact with the naive H @ w
product; both are exposed and property-tested against each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import CapacityError, InvalidParameterError

_BRUTE_FORCE_MAX_CODEWORDS = 1 << 16


def gf2_rank(mat: np.ndarray) -> int:
    """Rank of a binary matrix over GF(2), by elimination on packed rows."""
    rows = [int("".join("1" if b else "0" for b in row), 2) if len(row) else 0 for row in np.asarray(mat) % 2]
    rank = 0
    for col_bit in range(np.asarray(mat).shape[1] - 1, -1, -1):
        pivot = None
        for i in range(rank, len(rows)):
            if (rows[i] >> col_bit) & 1:
                pivot = i
                break
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(len(rows)):
            if i != rank and (rows[i] >> col_bit) & 1:
                rows[i] ^= rows[rank]
        rank += 1
    return rank


def _pack_columns(parity_check: np.ndarray) -> np.ndarray | None:
    """Column j of H as a uint64 bit mask (bit i = H[i, j]); None if it won't fit."""
    r, _ = parity_check.shape
    if r > 64:
        return None
    weights = (np.uint64(1) << np.arange(r, dtype=np.uint64))[:, None]
    return (parity_check.astype(np.uint64) * weights).sum(axis=0, dtype=np.uint64)


@dataclass(eq=False)
class LinearCode:
    """An (n, k) binary linear code given by generator and parity-check matrices."""

    name: str
    generator: np.ndarray
    parity_check: np.ndarray
    col_syndromes: np.ndarray | None = field(init=False, repr=False)
    _codewords: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.generator = np.ascontiguousarray(np.asarray(self.generator, dtype=np.uint8) % 2)
        self.parity_check = np.ascontiguousarray(np.asarray(self.parity_check, dtype=np.uint8) % 2)
        k, n = self.generator.shape
        r, n2 = self.parity_check.shape
        if n != n2 or r != n - k:
            raise InvalidParameterError(f"inconsistent G ({k}x{n}) / H ({r}x{n2}) shapes")
        if np.any((self.generator @ self.parity_check.T) % 2):
            raise InvalidParameterError("G @ H^T != 0 over GF(2)")
        if gf2_rank(self.generator) != k:
            raise InvalidParameterError("generator matrix is rank deficient")
        if gf2_rank(self.parity_check) != r:
            raise InvalidParameterError("parity-check matrix is rank deficient")
        self.col_syndromes = _pack_columns(self.parity_check)

    @property
    def n(self) -> int:
        return self.generator.shape[1]

    @property
    def k(self) -> int:
        return self.generator.shape[0]

    @property
    def rate(self) -> float:
        return self.k / self.n

    def syndrome(self, word: np.ndarray) -> np.ndarray:
        word = self._check_length(word)
        return (self.parity_check @ word) % 2

    def packed_syndrome(self, word: np.ndarray) -> int:
        """Syndrome as an integer bit mask; bit-exact with syndrome()."""
        word = self._check_length(word)
        if self.col_syndromes is None:
            s = self.syndrome(word)
            return int("".join(map(str, s[::-1])), 2) if s.any() else 0
        cols = self.col_syndromes[word.astype(bool)]
        return int(np.bitwise_xor.reduce(cols)) if cols.size else 0

    def contains(self, word: np.ndarray) -> bool:
        return self.packed_syndrome(word) == 0

    def encode(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.uint8)
        if u.shape != (self.k,):
            raise InvalidParameterError(f"need {self.k} information bits, got shape {u.shape}")
        return (u @ self.generator) % 2

    def random_codeword(self, rng: np.random.Generator) -> np.ndarray:
        return self.encode(rng.integers(0, 2, size=self.k, dtype=np.uint8))

    def all_codewords(self) -> np.ndarray:
        """Every codeword as a (2^k, n) matrix; capped for brute-force use only."""
        if self._codewords is None:
            if (1 << self.k) > _BRUTE_FORCE_MAX_CODEWORDS:
                raise CapacityError(f"2^{self.k} codewords exceed the brute-force cap")
            idx = np.arange(1 << self.k, dtype=np.uint32)
            msgs = ((idx[:, None] >> np.arange(self.k)) & 1).astype(np.uint8)
            self._codewords = (msgs @ self.generator) % 2
        return self._codewords

    def _check_length(self, word: np.ndarray) -> np.ndarray:
        word = np.asarray(word, dtype=np.uint8)
        if word.shape != (self.n,):
            raise InvalidParameterError(f"word length {word.shape} does not match n={self.n}")
        return word


def _systematic_pair(p: np.ndarray, name: str) -> LinearCode:
    """Code from a systematic parity block: G = [I | P], H = [P^T | I]."""
    k, r = p.shape
    g = np.concatenate([np.eye(k, dtype=np.uint8), p], axis=1)
    h = np.concatenate([p.T, np.eye(r, dtype=np.uint8)], axis=1)
    return LinearCode(name=name, generator=g, parity_check=h)


def hamming_7_4() -> LinearCode:
    p = np.array([[1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]], dtype=np.uint8)
    return _systematic_pair(p, "hamming74")


def repetition_code(n: int) -> LinearCode:
    if n < 2:
        raise InvalidParameterError("repetition code needs n >= 2")
    h = np.zeros((n - 1, n), dtype=np.uint8)
    for i in range(n - 1):
        h[i, i] = h[i, i + 1] = 1
    return LinearCode(name=f"repetition{n}", generator=np.ones((1, n), dtype=np.uint8), parity_check=h)


def random_linear_code(n: int, k: int, seed: int) -> LinearCode:
    """Seeded random code in systematic form (full rank by construction)."""
    if not (0 < k < n <= 16):
        raise InvalidParameterError(f"random_linear needs 0 < k < n <= 16, got n={n}, k={k}")
    rng = np.random.default_rng(seed)
    p = rng.integers(0, 2, size=(k, n - k), dtype=np.uint8)
    return _systematic_pair(p, f"random_linear~{n}.{k}.{seed}")


def build_toy_code(spec: str) -> LinearCode:
    """Small codes for brute-force oracle tests.

    Accepts "hamming74", "repetition:N", "random_linear:N,K,SEED".
    """
    spec = spec.strip()
    if spec == "hamming74":
        return hamming_7_4()
    if spec.startswith("repetition:"):
        return repetition_code(int(spec.split(":", 1)[1]))
    if spec.startswith("random_linear:"):
        parts = spec.split(":", 1)[1].split(",")
        if len(parts) != 3:
            raise InvalidParameterError(f"bad random_linear spec: {spec!r}")
        n, k, seed = (int(x) for x in parts)
        return random_linear_code(n, k, seed)
    raise InvalidParameterError(f"unknown toy code spec: {spec!r}")
