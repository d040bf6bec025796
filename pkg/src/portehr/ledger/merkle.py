from __future__ import annotations

from typing import Sequence

from ..crypto.hashing import content_hash

EMPTY_ROOT = content_hash(b"\x00")


def merkle_root(leaves: Sequence[bytes]) -> bytes:
    """Binary Merkle root with ``H(0x01 || left || right)`` interior nodes.

    An empty list hashes the single byte 0x00; one leaf is its own root; an odd
    node at the end of a level is paired with itself.
    """
    if not leaves:
        return EMPTY_ROOT
    level = list(leaves)
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        level = [content_hash(b"\x01" + level[i] + level[i + 1]) for i in range(0, len(level), 2)]
    return level[0]
