"""CRC-aided polar code: kernel transform, CRC, GA construction, membership.

The polar transform is v @ F^(x)m over GF(2) with F = [[1,0],[1,1]] in
natural (non-bit-reversed) order; it is an involution, so the inverse
transform is the transform itself. The frozen set comes from
density-evolution with the Gaussian approximation at a design SNR.

Membership (frozen positions zero after inverse transform, plus CRC over
the info bits) is a linear condition, so an equivalent parity-check
matrix is derived once and reused by the fast syndrome path; the
structural check stays as the definitional route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParameterError
from .gf2m import gf2_poly_degree
from .linear import LinearCode

CRC10_ATM_POLY = 0x633  # x^10+x^9+x^5+x^4+x+1; normal-form nickname 0x233


def polar_transform(v: np.ndarray) -> np.ndarray:
    """v @ F^(x)m over GF(2), natural order. Involution: applying twice is identity."""
    v = np.asarray(v, dtype=np.uint8)
    n = v.shape[-1]
    if n == 0 or (n & (n - 1)) != 0:
        raise InvalidParameterError(f"length {n} is not a power of two")
    out = v.copy()
    h = 1
    while h < n:
        blocks = out.reshape(-1, 2 * h)
        blocks[:, :h] ^= blocks[:, h:]
        h *= 2
    return out.reshape(v.shape)


def normalize_crc_poly(poly: int, crc_len: int | None = None) -> tuple[int, int]:
    """Accept a CRC polynomial in full form (leading 1) or normal form.

    Returns (full_poly, crc_len). A normal-form value (e.g. 0x233 for
    CRC-10/ATM) needs crc_len to place the implicit leading term.
    """
    if poly <= 0:
        raise InvalidParameterError("crc polynomial must be positive")
    if crc_len is None:
        return poly, gf2_poly_degree(poly)
    deg = gf2_poly_degree(poly)
    if deg == crc_len:
        return poly, crc_len
    if deg < crc_len:
        return poly | (1 << crc_len), crc_len
    raise InvalidParameterError(f"polynomial degree {deg} exceeds crc_len {crc_len}")


def crc_remainder(bits: np.ndarray, poly: int) -> np.ndarray:
    """Remainder of bits(x) * x^L mod poly(x) over GF(2), MSB-first, length L."""
    crc_len = gf2_poly_degree(poly)
    bits = np.asarray(bits, dtype=np.uint8)
    reg = 0
    for b in bits:
        reg = (reg << 1) | int(b)
        if (reg >> crc_len) & 1:
            reg ^= poly
    for _ in range(crc_len):
        reg <<= 1
        if (reg >> crc_len) & 1:
            reg ^= poly
    return np.array([(reg >> (crc_len - 1 - i)) & 1 for i in range(crc_len)], dtype=np.uint8)


# Gaussian-approximation density evolution (Chung et al. phi with the usual
# piecewise fit; Newton fallback for the inverse outside the fitted range).

def _phi(x: float) -> float:
    if x <= 0:
        return 1.0
    if x <= 10.0:
        return math.exp(-0.4527 * x**0.86 + 0.0218)
    return math.sqrt(math.pi / x) * math.exp(-x / 4.0) * (1.0 - 10.0 / (7.0 * x))


def _phi_inv(y: float) -> float:
    if y >= 1.0:
        return 0.0
    if y <= 0.0:
        return math.inf
    if 0.0388 <= y <= 1.0221:
        return ((0.0218 - math.log(y)) / 0.4527) ** (1.0 / 0.86)
    x = max(10.0, -4.0 * math.log(y))
    for _ in range(200):
        fx = _phi(x)
        if fx <= 0:
            break
        # d/dx log phi = -1/(2x) - 1/4 + (10/7)/(x^2 (1 - 10/(7x))) on the tail branch
        dlog = -0.5 / x - 0.25 + (10.0 / 7.0) / (x * x * (1.0 - 10.0 / (7.0 * x)))
        step = (math.log(fx) - math.log(y)) / dlog
        x -= step
        if abs(step) < 1e-9:
            break
    return max(x, 0.0)


def ga_channel_reliabilities(n: int, design_snr_db: float, rate: float) -> np.ndarray:
    """Mean LLR of each synthetic channel (natural order) via GA density evolution."""
    if n == 0 or (n & (n - 1)) != 0:
        raise InvalidParameterError(f"n={n} is not a power of two")
    sigma_sq = 1.0 / (2.0 * rate * 10.0 ** (design_snr_db / 10.0))
    m = [2.0 / sigma_sq]
    while len(m) < n:
        nxt = []
        for v in m:
            p = _phi(v)
            nxt.append(_phi_inv(p * (2.0 - p)))  # 1 - (1-p)^2, without cancellation
            nxt.append(2.0 * v)
        m = nxt
    return np.asarray(m)


@dataclass(eq=False)
class PolarCrcCode:
    """CRC-aided polar code; the (n, k) label counts CRC bits as information."""

    name: str
    n: int
    info_positions: np.ndarray
    crc_poly: int
    design_snr_db: float
    _linear: LinearCode | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.info_positions = np.asarray(sorted(int(i) for i in self.info_positions), dtype=np.int64)
        if self.n & (self.n - 1):
            raise InvalidParameterError("n must be a power of two")
        if np.any(self.info_positions < 0) or np.any(self.info_positions >= self.n):
            raise InvalidParameterError("info positions out of range")
        if len(set(self.info_positions.tolist())) != len(self.info_positions):
            raise InvalidParameterError("duplicate info positions")
        if self.payload_len <= 0:
            raise InvalidParameterError("CRC longer than the info set")
        frozen = np.setdiff1d(np.arange(self.n), self.info_positions)
        self.frozen_positions = frozen

    @property
    def crc_len(self) -> int:
        return gf2_poly_degree(self.crc_poly)

    @property
    def k(self) -> int:
        """Info bits including CRC, matching the (n, k) label."""
        return len(self.info_positions)

    @property
    def payload_len(self) -> int:
        return len(self.info_positions) - self.crc_len

    @property
    def rate(self) -> float:
        return self.k / self.n

    def encode(self, payload: np.ndarray) -> np.ndarray:
        payload = np.asarray(payload, dtype=np.uint8)
        if payload.shape != (self.payload_len,):
            raise InvalidParameterError(f"payload must have length {self.payload_len}")
        info = np.concatenate([payload, crc_remainder(payload, self.crc_poly)])
        u = np.zeros(self.n, dtype=np.uint8)
        u[self.info_positions] = info
        return polar_transform(u)

    def contains(self, word: np.ndarray) -> bool:
        """Structural membership: inverse transform, frozen bits zero, CRC passes."""
        word = np.asarray(word, dtype=np.uint8)
        if word.shape != (self.n,):
            raise InvalidParameterError(f"word length {word.shape} does not match n={self.n}")
        u = polar_transform(word)
        if u[self.frozen_positions].any():
            return False
        info = u[self.info_positions]
        payload, crc = info[: self.payload_len], info[self.payload_len :]
        return bool(np.array_equal(crc_remainder(payload, self.crc_poly), crc))

    def random_codeword(self, rng: np.random.Generator) -> np.ndarray:
        return self.encode(rng.integers(0, 2, size=self.payload_len, dtype=np.uint8))

    def equivalent_linear(self) -> LinearCode:
        """The same codebook as an explicit (n, payload_len) linear code.

        Frozen-bit and CRC constraints are both GF(2)-linear in the word, so
        they stack into a parity-check matrix; used for the packed-syndrome
        decode path and checked bit-exact against contains().
        """
        if self._linear is None:
            n = self.n
            # transform matrix rows: image of each unit vector
            tmat = polar_transform(np.eye(n, dtype=np.uint8))
            gen = np.empty((self.payload_len, n), dtype=np.uint8)
            for i in range(self.payload_len):
                e = np.zeros(self.payload_len, dtype=np.uint8)
                e[i] = 1
                gen[i] = self.encode(e)
            crc_len, plen = self.crc_len, self.payload_len
            rem_basis = np.empty((plen, crc_len), dtype=np.uint8)
            for i in range(plen):
                e = np.zeros(plen, dtype=np.uint8)
                e[i] = 1
                rem_basis[i] = crc_remainder(e, self.crc_poly)
            h_frozen = tmat[:, self.frozen_positions].T
            # crc constraint t: sum_l payload_l * rem_basis[l, t] + crc_t = 0,
            # with the info bits themselves linear images of the word
            info_rows = tmat[:, self.info_positions]  # (n, k): u_info = word @ info_rows
            h_crc = (info_rows[:, :plen] @ rem_basis) % 2
            h_crc = (h_crc + info_rows[:, plen:]) % 2
            h = np.concatenate([h_frozen, h_crc.T], axis=0) % 2
            self._linear = LinearCode(name=self.name + "~linear", generator=gen, parity_check=h)
        return self._linear

    @property
    def col_syndromes(self) -> np.ndarray | None:
        return self.equivalent_linear().col_syndromes

    def packed_syndrome(self, word: np.ndarray) -> int:
        return self.equivalent_linear().packed_syndrome(word)


def build_polar_crc(
    design_snr_db: float = 6.0,
    n: int = 128,
    k: int = 114,
    crc_poly: int = 0x233,
    crc_len: int = 10,
) -> PolarCrcCode:
    """CRC-aided polar(n, k): freeze the n-k least reliable GA channels."""
    poly, _ = normalize_crc_poly(crc_poly, crc_len)
    rel = ga_channel_reliabilities(n, design_snr_db, rate=k / n)
    order = np.argsort(rel, kind="stable")
    info = np.sort(order[n - k :])
    return PolarCrcCode(
        name=f"polar{n}_{k}",
        n=n,
        info_positions=info,
        crc_poly=poly,
        design_snr_db=design_snr_db,
    )
