"""CMX: bit-exact binary interchange format for compatibility tensors.

Layout (all integers little-endian):
    magic    "CMX1"          4 bytes
    version  uint16          = 1
    n        uint32          piece count
    relation_count uint8     4 or 16
    puzzle_type    uint8     1 or 2
    flags    uint8           bit0 normalized, bit1 symmetric
    reserved 3 zero bytes
followed by n * relation_count * n IEEE-754 float32 values in row-major
order (anchor, relation index 4*anchor_edge + candidate_edge, candidate).
"""

from __future__ import annotations

import io
import struct

import numpy as np

from .core import CompatibilityTensor, relations_for

MAGIC = b"CMX1"
VERSION = 1
HEADER = struct.Struct("<4sHIBBB3s")
HEADER_SIZE = HEADER.size  # 16


class CmxError(Exception):
    """Malformed or unreadable CMX data."""


class CmxBadMagic(CmxError):
    pass


class CmxBadVersion(CmxError):
    pass


class CmxShortPayload(CmxError):
    pass


def _expected_relation_count(puzzle_type: int) -> int:
    return 4 if puzzle_type == 1 else 16


def write_cmx(t: CompatibilityTensor, destination) -> int:
    """Serialize a tensor; returns the byte count 16 + 4*n^2*relations.

    `destination` may be a path or a binary stream. NaN scores are rejected.
    """
    rel_count = len(t.relations)
    if rel_count != _expected_relation_count(t.puzzle_type):
        raise CmxError("relation count inconsistent with puzzle type")
    payload = np.ascontiguousarray(t.scores, dtype=np.float32)
    if np.isnan(payload).any():
        raise CmxError("refusing to write NaN scores")
    flags = (1 if t.normalized else 0) | (2 if t.symmetric else 0)
    header = HEADER.pack(
        MAGIC, VERSION, t.n, rel_count, t.puzzle_type, flags, b"\x00\x00\x00"
    )
    data = header + payload.tobytes()
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        try:
            with open(destination, "wb") as fh:
                fh.write(data)
        except OSError as exc:
            raise CmxError(f"cannot write {destination}: {exc}") from exc
    return len(data)


def read_cmx(source) -> CompatibilityTensor:
    """Inverse of write_cmx; validates magic, version, and payload length."""
    if hasattr(source, "read"):
        data = source.read()
    else:
        try:
            with open(source, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise CmxError(f"cannot read {source}: {exc}") from exc
    if len(data) < HEADER_SIZE:
        raise CmxShortPayload("short payload: truncated header")
    magic, version, n, rel_count, puzzle_type, flags, _ = HEADER.unpack(
        data[:HEADER_SIZE]
    )
    if magic != MAGIC:
        raise CmxBadMagic("not a CMX file")
    if version != VERSION:
        raise CmxBadVersion(f"unsupported CMX version {version}")
    if puzzle_type not in (1, 2) or rel_count != _expected_relation_count(
        puzzle_type
    ):
        raise CmxError("relation count inconsistent with puzzle type")
    expected = HEADER_SIZE + 4 * n * n * rel_count
    if len(data) != expected:
        raise CmxShortPayload(
            f"short payload: expected {expected} bytes, got {len(data)}"
        )
    scores = np.frombuffer(
        data, dtype="<f4", count=n * rel_count * n, offset=HEADER_SIZE
    ).astype(np.float64)
    return CompatibilityTensor(
        n=n,
        puzzle_type=puzzle_type,
        scores=scores.reshape(n, rel_count, n),
        normalized=bool(flags & 1),
        symmetric=bool(flags & 2),
        relations=relations_for(puzzle_type),
    )


def roundtrip_bytes(t: CompatibilityTensor) -> bytes:
    buf = io.BytesIO()
    write_cmx(t, buf)
    return buf.getvalue()
