"""Content hashing and the lowercase-hex convention used in every file format."""

from __future__ import annotations

import hashlib

DIGEST_SIZE = 32
PSEUDONYM_BYTES = 16


def content_hash(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def to_hex(data: bytes) -> str:
    return data.hex()


def from_hex(text: str, length: int | None = None) -> bytes:
    """Strict decode: lowercase only, no prefix, optional exact length."""
    if not isinstance(text, str):
        raise ValueError("hex value must be a string")
    if text != text.lower() or text.startswith("0x"):
        raise ValueError(f"hex must be lowercase without prefix: {text[:16]!r}")
    raw = bytes.fromhex(text)
    if raw.hex() != text:
        raise ValueError("hex contains whitespace or separators")
    if length is not None and len(raw) != length:
        raise ValueError(f"expected {length} bytes, got {len(raw)}")
    return raw


def pseudonym_of(public_key: bytes) -> str:
    """First 16 bytes of SHA-256 of a verification key, as hex."""
    return content_hash(public_key)[:PSEUDONYM_BYTES].hex()
