"""Name-based code construction, shared by the CLI, service and tests."""

from __future__ import annotations

from functools import lru_cache

from ..errors import InvalidParameterError
from .gf2m import build_bch_127_113
from .linear import build_toy_code
from .polar import build_polar_crc


@lru_cache(maxsize=32)
def code_from_spec(spec: str):
    """Build a code from a short spec string.

    Known specs: "bch127_113", "polar128_114" (optionally
    "polar128_114@<design_snr_db>"), "hamming74", "repetition:N",
    "random_linear:N,K,SEED".
    """
    spec = spec.strip()
    if spec == "bch127_113":
        return build_bch_127_113()
    if spec.startswith("polar128_114"):
        if "@" in spec:
            return build_polar_crc(design_snr_db=float(spec.split("@", 1)[1]))
        return build_polar_crc()
    try:
        return build_toy_code(spec)
    except InvalidParameterError:
        raise InvalidParameterError(f"unknown code spec: {spec!r}") from None
