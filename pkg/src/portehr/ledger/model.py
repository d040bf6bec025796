"""Ledger value types and their canonical JSON forms."""

from __future__ import annotations

import copy
import enum
import re
from dataclasses import dataclass, field
from typing import Any, Callable

from ..crypto.hashing import content_hash, from_hex
from ..crypto.signing import SIGNATURE_SIZE
from ..errors import MalformedBlock, NonCanonicalizable, SchemaViolation
from .canonical import canonical_decode, canonical_encode
from .merkle import merkle_root

GENESIS_PARENT = bytes(32)
MAX_TEXT = 64
U64 = 2**64


class TxKind(str, enum.Enum):
    RECORD_ANCHOR = "RecordAnchor"
    CONSENT_GRANT = "ConsentGrant"
    CONSENT_REVOKE = "ConsentRevoke"
    IDENTITY_ATTESTATION = "IdentityAttestation"


# -- payload schemas -----------------------------------------------------------
# Each kind lists exactly the fields it may carry. Nothing else reaches the
# chain, which is how "no medical data on chain" is enforced.

_HEX_RE = re.compile(r"^[0-9a-f]*$")
_COUNTRY_RE = re.compile(r"^[A-Z]{2}$")


def _hex_of(nbytes: int) -> Callable[[Any], bool]:
    def check(v: Any) -> bool:
        return isinstance(v, str) and len(v) == 2 * nbytes and bool(_HEX_RE.match(v))
    return check


def _count(lo: int, hi: int) -> Callable[[Any], bool]:
    def check(v: Any) -> bool:
        return isinstance(v, int) and not isinstance(v, bool) and lo <= v <= hi
    return check


def _short_text(v: Any) -> bool:
    return isinstance(v, str) and 0 < len(v.encode("utf-8")) <= MAX_TEXT


def _country(v: Any) -> bool:
    return isinstance(v, str) and bool(_COUNTRY_RE.match(v))


def _id_list(v: Any) -> bool:
    return isinstance(v, list) and len(v) <= 254 and all(_short_text(x) for x in v) \
        and len(set(v)) == len(v)


_pseudonym = _hex_of(16)
_digest = _hex_of(32)
_public = _hex_of(32)

PAYLOAD_SCHEMAS: dict[TxKind, dict[str, Callable[[Any], bool]]] = {
    TxKind.RECORD_ANCHOR: {
        "patient_pseudonym": _pseudonym,
        "cid": _digest,
        "k": _count(1, 255),
        "n": _count(1, 255),
        "custodians": _id_list,
        "country": _country,
    },
    TxKind.CONSENT_GRANT: {
        "patient_pseudonym": _pseudonym,
        "grantee_public": _public,
        "record_cid": _digest,
        "purpose": _short_text,
        "expires_at": _count(0, U64 - 1),
    },
    TxKind.CONSENT_REVOKE: {
        "patient_pseudonym": _pseudonym,
        "grantee_public": _public,
        "record_cid": _digest,
    },
    TxKind.IDENTITY_ATTESTATION: {
        "patient_pseudonym": _pseudonym,
        "country": _country,
    },
}


def check_payload(kind: TxKind, payload: Any) -> None:
    """Raise ``SchemaViolation`` unless ``payload`` matches the kind's allow-list."""
    schema = PAYLOAD_SCHEMAS[kind]
    if not isinstance(payload, dict):
        raise SchemaViolation(f"{kind.value} payload must be an object")
    extra = set(payload) - set(schema)
    missing = set(schema) - set(payload)
    if extra or missing:
        raise SchemaViolation(
            f"{kind.value} payload fields: unexpected {sorted(extra)}, missing {sorted(missing)}")
    for name, ok in schema.items():
        if not ok(payload[name]):
            raise SchemaViolation(f"{kind.value}.{name} has an invalid value")
    if kind is TxKind.RECORD_ANCHOR:
        if payload["k"] > payload["n"]:
            raise SchemaViolation("RecordAnchor k exceeds n")
        if len(payload["custodians"]) + 1 != payload["n"]:
            raise SchemaViolation("RecordAnchor needs n-1 custodians")


# -- transactions --------------------------------------------------------------

@dataclass(frozen=True)
class Transaction:
    kind: TxKind
    author_public: bytes
    payload: dict = field(hash=False)
    nonce: int
    signature: bytes = b""

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", TxKind(self.kind))
        object.__setattr__(self, "payload", copy.deepcopy(self.payload))

    def signing_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "author_public": self.author_public.hex(),
            "payload": self.payload,
            "nonce": self.nonce,
        }

    def signing_bytes(self) -> bytes:
        return canonical_encode(self.signing_json())

    def to_json(self) -> dict:
        return {**self.signing_json(), "signature": self.signature.hex()}

    def leaf(self) -> bytes:
        return content_hash(canonical_encode(self.to_json()))

    @classmethod
    def from_json(cls, obj: Any) -> "Transaction":
        fields = {"kind", "author_public", "payload", "nonce", "signature"}
        if not isinstance(obj, dict) or set(obj) != fields:
            raise MalformedBlock("transaction object has wrong fields")
        try:
            kind = TxKind(obj["kind"])
        except ValueError:
            raise MalformedBlock(f"unknown transaction kind {obj['kind']!r}") from None
        nonce = obj["nonce"]
        if not _count(0, U64 - 1)(nonce):
            raise MalformedBlock("transaction nonce must be a 64-bit count")
        if not isinstance(obj["payload"], dict):
            raise MalformedBlock("transaction payload must be an object")
        try:
            return cls(kind, from_hex(obj["author_public"], 32), obj["payload"], nonce,
                       from_hex(obj["signature"], SIGNATURE_SIZE))
        except ValueError as exc:
            raise MalformedBlock(str(exc)) from None


# -- blocks ----------------------------------------------------------------------

@dataclass(frozen=True)
class Block:
    height: int
    parent: bytes
    merkle_root: bytes
    timestamp: int
    authority_index: int
    transactions: tuple[Transaction, ...] = ()
    authority_signature: bytes = b""

    def header_json(self) -> dict:
        return {
            "height": self.height,
            "parent": self.parent.hex(),
            "merkle_root": self.merkle_root.hex(),
            "timestamp": self.timestamp,
            "authority_index": self.authority_index,
        }

    def header_bytes(self) -> bytes:
        return canonical_encode(self.header_json())

    def unsigned_json(self) -> dict:
        return {**self.header_json(), "transactions": [tx.to_json() for tx in self.transactions]}

    def to_json(self) -> dict:
        return {**self.unsigned_json(), "authority_signature": self.authority_signature.hex()}

    def digest(self) -> bytes:
        return content_hash(canonical_encode(self.unsigned_json()) + self.authority_signature)

    def computed_merkle_root(self) -> bytes:
        return merkle_root([tx.leaf() for tx in self.transactions])

    @classmethod
    def from_json(cls, obj: Any) -> "Block":
        fields = {"height", "parent", "merkle_root", "timestamp", "authority_index",
                  "transactions", "authority_signature"}
        if not isinstance(obj, dict) or set(obj) != fields:
            raise MalformedBlock("block object has wrong fields")
        for name in ("height", "timestamp", "authority_index"):
            if not _count(0, U64 - 1)(obj[name]):
                raise MalformedBlock(f"block {name} must be a 64-bit count")
        if not isinstance(obj["transactions"], list):
            raise MalformedBlock("block transactions must be a list")
        try:
            return cls(
                height=obj["height"],
                parent=from_hex(obj["parent"], 32),
                merkle_root=from_hex(obj["merkle_root"], 32),
                timestamp=obj["timestamp"],
                authority_index=obj["authority_index"],
                transactions=tuple(Transaction.from_json(t) for t in obj["transactions"]),
                authority_signature=from_hex(obj["authority_signature"], SIGNATURE_SIZE),
            )
        except ValueError as exc:
            raise MalformedBlock(str(exc)) from None

    def to_bytes(self) -> bytes:
        return canonical_encode(self.to_json())

    @classmethod
    def from_bytes(cls, data: bytes) -> "Block":
        """Strict decode; any byte that is not canonical raises ``MalformedBlock``."""
        try:
            return cls.from_json(canonical_decode(data))
        except NonCanonicalizable as exc:
            raise MalformedBlock(str(exc)) from None


# -- chain -----------------------------------------------------------------------

@dataclass(frozen=True)
class Chain:
    authorities: tuple[bytes, ...]
    blocks: tuple[Block, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "authorities", tuple(self.authorities))
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.authorities:
            raise ValueError("a chain needs at least one authority")

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def tip(self) -> Block | None:
        return self.blocks[-1] if self.blocks else None

    @property
    def next_height(self) -> int:
        return len(self.blocks)

    def authority_for(self, height: int) -> int:
        return height % len(self.authorities)

    def prefix(self, length: int) -> "Chain":
        return Chain(self.authorities, self.blocks[:length])

    def digest(self) -> bytes:
        """Digest of the tip block, or the genesis parent for an empty chain."""
        return self.tip.digest() if self.blocks else GENESIS_PARENT

    def iter_transactions(self):
        for block in self.blocks:
            for i, tx in enumerate(block.transactions):
                yield block.height, i, tx

    def to_json(self) -> list:
        return [b.to_json() for b in self.blocks]

    def to_bytes(self) -> bytes:
        return canonical_encode(self.to_json())

    @classmethod
    def from_json(cls, blocks: Any, authorities) -> "Chain":
        if not isinstance(blocks, list):
            raise MalformedBlock("chain file must hold a JSON array of blocks")
        return cls(tuple(authorities), tuple(Block.from_json(b) for b in blocks))
