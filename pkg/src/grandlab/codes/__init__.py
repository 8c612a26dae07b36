"""Binary code constructions and membership tests."""

from .linear import (
    LinearCode,
    build_toy_code,
    gf2_rank,
    hamming_7_4,
    random_linear_code,
    repetition_code,
)
from .gf2m import GF2mField, bch_generator_poly, build_bch_127_113
from .polar import PolarCrcCode, build_polar_crc, crc_remainder, polar_transform
from .registry import code_from_spec
from .io import load_code, save_code

__all__ = [
    "GF2mField",
    "LinearCode",
    "PolarCrcCode",
    "bch_generator_poly",
    "build_bch_127_113",
    "build_polar_crc",
    "build_toy_code",
    "code_from_spec",
    "crc_remainder",
    "gf2_rank",
    "hamming_7_4",
    "load_code",
    "polar_transform",
    "random_linear_code",
    "repetition_code",
    "save_code",
]
