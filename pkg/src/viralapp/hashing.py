"""Canonical byte serialization and content hashing.

Every value that takes part in a hash is first turned into a canonical byte
string (see docs/canonical_format.md) and then digested with SHA-256. The
serialization is what makes digests portable; the digest primitive is an
implementation detail.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping

DIGEST_SIZE = 32


def _u64(n: int) -> bytes:
    return struct.pack(">Q", n)


def _blob(tag: bytes, payload: bytes) -> bytes:
    return tag + _u64(len(payload)) + payload


def canonical_bytes(value: Any) -> bytes:
    """Serialize ``value`` into its canonical byte form.

    Supported: None, bool, int, Fraction, float, str, bytes, ContentHash,
    enums, lists/tuples, sets/frozensets, mappings with str keys and
    dataclass instances. Dataclasses may name fields to leave out via a
    ``__canonical_exclude__`` class attribute.
    """
    if value is None:
        return b"N"
    if value is True:
        return b"T"
    if value is False:
        return b"F"
    if isinstance(value, ContentHash):
        return _blob(b"H", value.digest)
    if isinstance(value, enum.Enum):
        return _blob(b"U", str(value.value).encode("utf-8"))
    if isinstance(value, int):
        return _blob(b"I", str(value).encode("ascii"))
    if isinstance(value, Fraction):
        return _blob(b"Q", f"{value.numerator}/{value.denominator}".encode("ascii"))
    if isinstance(value, float):
        return _blob(b"D", repr(value).encode("ascii"))
    if isinstance(value, str):
        return _blob(b"S", value.encode("utf-8"))
    if isinstance(value, (bytes, bytearray, memoryview)):
        return _blob(b"B", bytes(value))
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        exclude = getattr(type(value), "__canonical_exclude__", ())
        parts = [_blob(b"S", type(value).__name__.encode("utf-8"))]
        for f in dataclasses.fields(value):
            if f.name in exclude:
                continue
            parts.append(_blob(b"S", f.name.encode("utf-8")))
            parts.append(canonical_bytes(getattr(value, f.name)))
        return b"R" + _u64(len(parts) - 1) + b"".join(parts)
    if isinstance(value, Mapping):
        items = []
        for k, v in value.items():
            if not isinstance(k, str):
                raise TypeError(f"canonical map keys must be str, got {type(k).__name__}")
            items.append((k.encode("utf-8"), v))
        items.sort(key=lambda kv: kv[0])
        body = b"".join(_blob(b"S", k) + canonical_bytes(v) for k, v in items)
        return b"M" + _u64(len(items)) + body
    if isinstance(value, (set, frozenset)):
        encoded = sorted(canonical_bytes(v) for v in value)
        return b"E" + _u64(len(encoded)) + b"".join(encoded)
    if isinstance(value, (list, tuple)):
        return b"L" + _u64(len(value)) + b"".join(canonical_bytes(v) for v in value)
    raise TypeError(f"no canonical form for {type(value).__name__}")


@dataclass(frozen=True, order=True)
class ContentHash:
    """A 256-bit digest of canonical content."""

    digest: bytes

    def __post_init__(self) -> None:
        if len(self.digest) != DIGEST_SIZE:
            raise ValueError(f"digest must be {DIGEST_SIZE} bytes")

    @property
    def hex(self) -> str:
        return self.digest.hex()

    @classmethod
    def from_hex(cls, text: str) -> ContentHash:
        return cls(bytes.fromhex(text))

    def short(self, n: int = 12) -> str:
        return self.hex[:n]

    def __str__(self) -> str:
        return self.hex

    def __repr__(self) -> str:
        return f"ContentHash({self.short()}…)"


def canonical_hash(*values: Any) -> ContentHash:
    """Hash one value, or a tuple of values when several are given."""
    value = values[0] if len(values) == 1 else tuple(values)
    return ContentHash(hashlib.sha256(canonical_bytes(value)).digest())
