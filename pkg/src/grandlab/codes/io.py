"""Text serialization of codes.

Format: header line `CODE v1 type=<linear|polar_crc> n=<n> k=<k> [name=..]`,
then for linear codes the rows of G and H as hex strings, and for polar
codes the frozen-set indices plus the CRC polynomial. Round-trips are
bit-exact.
"""

from __future__ import annotations

import numpy as np

from ..errors import FileFormatError
from .linear import LinearCode
from .polar import PolarCrcCode


def _row_to_hex(row: np.ndarray) -> str:
    n = len(row)
    width = -(-n // 4) * 4
    bits = "".join("1" if b else "0" for b in row) + "0" * (width - n)
    return hex(int(bits, 2))[2:].zfill(width // 4)


def _hex_to_row(s: str, n: int) -> np.ndarray:
    width = -(-n // 4) * 4
    if len(s) != width // 4:
        raise FileFormatError(f"hex row has {len(s)} digits, expected {width // 4}")
    bits = bin(int(s, 16))[2:].zfill(width)
    return np.array([1 if c == "1" else 0 for c in bits[:n]], dtype=np.uint8)


def _parse_header(line: str, expected_kind: str = "CODE") -> dict:
    parts = line.strip().split()
    if len(parts) < 2 or parts[0] != expected_kind or parts[1] != "v1":
        raise FileFormatError(f"malformed header: {line.strip()!r}")
    fields = {}
    for tok in parts[2:]:
        if "=" not in tok:
            raise FileFormatError(f"malformed header token: {tok!r}")
        key, val = tok.split("=", 1)
        fields[key] = val
    return fields


def save_code(code, path) -> None:
    lines = []
    if isinstance(code, LinearCode):
        lines.append(f"CODE v1 type=linear n={code.n} k={code.k} name={code.name}")
        for row in code.generator:
            lines.append("G " + _row_to_hex(row))
        for row in code.parity_check:
            lines.append("H " + _row_to_hex(row))
    elif isinstance(code, PolarCrcCode):
        lines.append(f"CODE v1 type=polar_crc n={code.n} k={code.k} name={code.name}")
        lines.append("frozen " + " ".join(str(i) for i in code.frozen_positions))
        lines.append(f"crc_poly {hex(code.crc_poly)}")
        lines.append(f"design_snr_db {code.design_snr_db!r}")
    else:
        raise FileFormatError(f"cannot serialize {type(code).__name__}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_code(path):
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise FileFormatError("empty code file")
    hdr = _parse_header(lines[0])
    try:
        n, k = int(hdr["n"]), int(hdr["k"])
    except (KeyError, ValueError) as exc:
        raise FileFormatError(f"bad header fields: {exc}") from None
    name = hdr.get("name", "loaded")
    kind = hdr.get("type")
    if kind == "linear":
        g_rows = [ln[2:] for ln in lines[1:] if ln.startswith("G ")]
        h_rows = [ln[2:] for ln in lines[1:] if ln.startswith("H ")]
        if len(g_rows) != k or len(h_rows) != n - k:
            raise FileFormatError(f"expected {k} G rows and {n - k} H rows, got {len(g_rows)}/{len(h_rows)}")
        g = np.stack([_hex_to_row(s, n) for s in g_rows])
        h = np.stack([_hex_to_row(s, n) for s in h_rows])
        return LinearCode(name=name, generator=g, parity_check=h)
    if kind == "polar_crc":
        frozen = None
        crc_poly = None
        design = 0.0
        for ln in lines[1:]:
            key, _, rest = ln.partition(" ")
            if key == "frozen":
                frozen = [int(t) for t in rest.split()]
            elif key == "crc_poly":
                crc_poly = int(rest, 16)
            elif key == "design_snr_db":
                design = float(rest)
        if frozen is None or crc_poly is None:
            raise FileFormatError("polar_crc file missing frozen set or crc_poly")
        info = sorted(set(range(n)) - set(frozen))
        if len(info) != k:
            raise FileFormatError(f"frozen set size {len(frozen)} inconsistent with k={k}")
        return PolarCrcCode(name=name, n=n, info_positions=np.asarray(info), crc_poly=crc_poly, design_snr_db=design)
    raise FileFormatError(f"unknown code type {kind!r}")
