"""TLV primitives: VAR-NUMBER type/length and non-negative integers.

Type and length use the 1/3/5-byte forms (values < 253 in one byte, 253 +
uint16, 254 + uint32).  Decoding rejects non-minimal forms so that every
byte string decodes to at most one value.
"""

from __future__ import annotations

from collections.abc import Iterator

from .errors import MalformedPacket


def encode_varnum(n: int) -> bytes:
    if n < 0:
        raise ValueError("negative var-number")
    if n < 253:
        return bytes([n])
    if n <= 0xFFFF:
        return b"\xfd" + n.to_bytes(2, "big")
    if n <= 0xFFFFFFFF:
        return b"\xfe" + n.to_bytes(4, "big")
    raise ValueError("var-number too large for 5-byte form")


def decode_varnum(buf: bytes, offset: int) -> tuple[int, int]:
    if offset >= len(buf):
        raise MalformedPacket("truncated var-number")
    first = buf[offset]
    if first < 253:
        return first, offset + 1
    width = {253: 2, 254: 4}.get(first)
    if width is None:
        raise MalformedPacket("unsupported 9-byte var-number")
    end = offset + 1 + width
    if end > len(buf):
        raise MalformedPacket("truncated var-number")
    value = int.from_bytes(buf[offset + 1:end], "big")
    if (width == 2 and value < 253) or (width == 4 and value <= 0xFFFF):
        raise MalformedPacket("non-minimal var-number")
    return value, end


def encode_tlv(tlv_type: int, value: bytes) -> bytes:
    return encode_varnum(tlv_type) + encode_varnum(len(value)) + value


def encode_nonneg(n: int) -> bytes:
    for width in (1, 2, 4, 8):
        if n < 1 << (8 * width):
            return n.to_bytes(width, "big")
    raise ValueError("integer too large")


def decode_nonneg(value: bytes) -> int:
    if len(value) not in (1, 2, 4, 8):
        raise MalformedPacket("bad non-negative integer width")
    n = int.from_bytes(value, "big")
    if encode_nonneg(n) != value:
        raise MalformedPacket("non-minimal non-negative integer")
    return n


def iter_tlvs(buf: bytes, start: int = 0, end: int | None = None) -> Iterator[tuple[int, bytes]]:
    """Yield (type, value) pairs covering ``buf[start:end]`` exactly."""
    end = len(buf) if end is None else end
    offset = start
    while offset < end:
        t, offset = decode_varnum(buf, offset)
        length, offset = decode_varnum(buf, offset)
        if offset + length > end:
            raise MalformedPacket("TLV length exceeds enclosing buffer")
        yield t, buf[offset:offset + length]
        offset += length


def read_single(buf: bytes) -> tuple[int, bytes]:
    """Decode a buffer that must hold exactly one TLV."""
    items = list(iter_tlvs(buf))
    if len(items) != 1:
        raise MalformedPacket("expected exactly one top-level TLV")
    return items[0]


def decode_fields(buf: bytes, allowed: dict[int, str], required: set[int] = frozenset()) -> dict[int, bytes]:
    """Decode a flat sequence of TLVs, each type at most once, in ``allowed`` order."""
    out: dict[int, bytes] = {}
    order = list(allowed)
    last = -1
    for t, v in iter_tlvs(buf):
        if t not in allowed:
            raise MalformedPacket(f"unexpected TLV type {t:#x}")
        pos = order.index(t)
        if pos <= last:
            raise MalformedPacket(f"TLV {allowed[t]} out of order or repeated")
        last = pos
        out[t] = v
    missing = set(required) - set(out)
    if missing:
        names = ", ".join(allowed[t] for t in sorted(missing))
        raise MalformedPacket(f"missing required TLV: {names}")
    return out
