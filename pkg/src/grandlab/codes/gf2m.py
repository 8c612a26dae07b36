"""GF(2^m) arithmetic and the BCH(127,113) construction.

Polynomials over GF(2) are integers (bit i = coefficient of x^i). The BCH
code is cyclic with generator polynomial g(x) = lcm of the minimal
polynomials of alpha and alpha^3 in GF(2^7); only encode and membership
are needed here, no algebraic decoding.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParameterError
from .linear import LinearCode

BCH_127_PRIMITIVE_POLY = 0b1000_1001  # x^7 + x^3 + 1


def gf2_poly_degree(p: int) -> int:
    return p.bit_length() - 1


def gf2_poly_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def gf2_poly_divmod(a: int, b: int) -> tuple[int, int]:
    if b == 0:
        raise ZeroDivisionError("division by the zero polynomial")
    q = 0
    db = gf2_poly_degree(b)
    while gf2_poly_degree(a) >= db and a:
        shift = gf2_poly_degree(a) - db
        q ^= 1 << shift
        a ^= b << shift
    return q, a


def gf2_poly_mod(a: int, b: int) -> int:
    return gf2_poly_divmod(a, b)[1]


class GF2mField:
    """GF(2^m) with exp/log tables generated by a primitive polynomial."""

    def __init__(self, m: int, primitive_poly: int):
        if gf2_poly_degree(primitive_poly) != m:
            raise InvalidParameterError(f"primitive_poly degree {gf2_poly_degree(primitive_poly)} != m={m}")
        self.m = m
        self.primitive_poly = primitive_poly
        order = (1 << m) - 1
        exp = [0] * order
        val = 1
        for i in range(order):
            exp[i] = val
            val <<= 1
            if val >> m:
                val ^= primitive_poly
            if val == 1 and i < order - 1:
                raise InvalidParameterError("polynomial is not primitive (alpha has small order)")
        if val != 1:
            raise InvalidParameterError("polynomial is not primitive")
        self.exp = exp
        self.log = {v: i for i, v in enumerate(exp)}
        self.order = order

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self.exp[(self.log[a] + self.log[b]) % self.order]

    def alpha_pow(self, e: int) -> int:
        return self.exp[e % self.order]


def cyclotomic_coset(e: int, m: int) -> tuple[int, ...]:
    order = (1 << m) - 1
    coset = set()
    x = e % order
    while x not in coset:
        coset.add(x)
        x = (x * 2) % order
    return tuple(sorted(coset))


def minimal_polynomial(field: GF2mField, e: int) -> int:
    """Minimal polynomial of alpha^e over GF(2), as an integer polynomial."""
    # prod over the coset of (x - alpha^s), computed with coefficients in GF(2^m)
    coeffs = [1]
    for s in cyclotomic_coset(e, field.m):
        root = field.alpha_pow(s)
        nxt = [0] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i] ^= field.mul(c, root)
            nxt[i + 1] ^= c
        coeffs = nxt
    poly = 0
    for i, c in enumerate(coeffs):
        if c not in (0, 1):
            raise InvalidParameterError("minimal polynomial has a coefficient outside GF(2)")
        poly |= c << i
    return poly


def bch_generator_poly(field: GF2mField, exponents=(1, 3)) -> int:
    """Generator polynomial: lcm of the minimal polynomials of alpha^e, e in exponents."""
    cosets = set()
    g = 1
    for e in exponents:
        coset = cyclotomic_coset(e, field.m)
        if coset in cosets:
            continue
        cosets.add(coset)
        g = gf2_poly_mul(g, minimal_polynomial(field, e))
    return g


def _cyclic_code_from_gpoly(g: int, n: int, name: str) -> LinearCode:
    deg = gf2_poly_degree(g)
    k = n - deg
    gen = np.zeros((k, n), dtype=np.uint8)
    gbits = [(g >> j) & 1 for j in range(deg + 1)]
    for i in range(k):
        gen[i, i : i + deg + 1] = gbits
    # H column i = coefficients of x^i mod g(x); the syndrome of a word is
    # then its residue mod g, which vanishes exactly on the cyclic code.
    h = np.zeros((deg, n), dtype=np.uint8)
    r = 1
    for i in range(n):
        for j in range(deg):
            h[j, i] = (r >> j) & 1
        r <<= 1
        if gf2_poly_degree(r) >= deg:
            r ^= g
    return LinearCode(name=name, generator=gen, parity_check=h)


def build_bch_127_113() -> LinearCode:
    """Narrow-sense double-error-correcting BCH(127, 113) over GF(2^7)."""
    field = GF2mField(7, BCH_127_PRIMITIVE_POLY)
    g = bch_generator_poly(field, exponents=(1, 3))
    if gf2_poly_degree(g) != 14:
        raise InvalidParameterError(f"unexpected generator degree {gf2_poly_degree(g)}")
    return _cyclic_code_from_gpoly(g, 127, "bch127_113")
