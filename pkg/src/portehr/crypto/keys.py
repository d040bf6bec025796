"""Hierarchical key tree: every child is HMAC-SHA-256 of its parent."""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass, field

from ..errors import LabelTooLong, MalformedKey

KEY_SIZE = 32
MAX_LABEL = 16


@dataclass(frozen=True)
class SecretKey:
    value: bytes = field(repr=False)

    def __post_init__(self) -> None:
        if not isinstance(self.value, bytes) or len(self.value) != KEY_SIZE:
            raise MalformedKey(f"secret keys are exactly {KEY_SIZE} bytes")

    def __repr__(self) -> str:
        return "SecretKey(<redacted>)"


def derive_child_key(parent: SecretKey, label: str, index: int) -> SecretKey:
    """``HMAC-SHA-256(parent, label || index_be32)``."""
    try:
        label_bytes = label.encode("ascii")
    except UnicodeEncodeError:
        raise LabelTooLong(f"label {label!r} is not ASCII") from None
    if len(label_bytes) > MAX_LABEL:
        raise LabelTooLong(f"label {label!r} longer than {MAX_LABEL} bytes")
    if not 0 <= index < 2**32:
        raise ValueError("index must fit in 32 bits")
    mac = hmac.new(parent.value, label_bytes + index.to_bytes(4, "big"), hashlib.sha256)
    return SecretKey(mac.digest())


@dataclass(frozen=True)
class KeyNode:
    key: SecretKey
    path: tuple[tuple[str, int], ...] = ()

    @property
    def is_root(self) -> bool:
        return not self.path

    def child(self, label: str, index: int) -> "KeyNode":
        return KeyNode(derive_child_key(self.key, label, index), self.path + ((label, index),))


def derive_path(root: SecretKey, path) -> KeyNode:
    node = KeyNode(root)
    for label, index in path:
        node = node.child(label, index)
    return node


def root_from_seed(seed: int, domain: bytes = b"portehr/root/v1") -> SecretKey:
    """Deterministic wallet root for a 64-bit seed."""
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return SecretKey(hashlib.sha256(domain + seed.to_bytes(8, "big")).digest())
