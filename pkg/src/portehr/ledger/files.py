"""Chain file I/O: a JSON array of blocks plus an authorities sidecar."""

from __future__ import annotations

import json
from pathlib import Path

from ..crypto.hashing import from_hex
from ..errors import MalformedBlock
from .model import Chain


def authorities_path(chain_path: Path) -> Path:
    return chain_path.with_name(chain_path.stem + ".authorities.json")


def write_chain(chain: Chain, path: str | Path) -> Path:
    path = Path(path)
    path.write_bytes(chain.to_bytes())
    authorities_path(path).write_text(json.dumps([a.hex() for a in chain.authorities]))
    return path


def read_authorities(path: str | Path) -> tuple[bytes, ...]:
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, list) or not raw:
        raise MalformedBlock("authorities file must be a non-empty JSON array of hex keys")
    try:
        return tuple(from_hex(a, 32) for a in raw)
    except ValueError as exc:
        raise MalformedBlock(f"bad authority key: {exc}") from None


def read_chain(path: str | Path, authorities: str | Path | None = None) -> Chain:
    path = Path(path)
    try:
        blocks = json.loads(path.read_bytes())
    except json.JSONDecodeError as exc:
        raise MalformedBlock(f"chain file is not JSON: {exc}") from None
    return Chain.from_json(blocks, read_authorities(authorities or authorities_path(path)))
