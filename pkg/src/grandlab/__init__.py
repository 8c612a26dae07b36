"""Decoding laboratory for GRAND-family universal soft-decision decoders.

Core pieces: AWGN/BPSK channel model, binary code constructions (BCH,
CRC-aided polar, toy codes), rank-domain error-pattern schedules, the
GRAND query loop with static and online (SGRAND) ordering policies,
offline schedule reshuffling driven by Monte Carlo mean-posterior
estimates, brute-force oracles, and a Monte Carlo benchmark harness.
"""

__version__ = "0.1.0"

from .errors import CapacityError, FileFormatError, InvalidParameterError

__all__ = ["CapacityError", "FileFormatError", "InvalidParameterError", "__version__"]
