"""Round-robin proof-of-authority: block building, validation and queries."""

from __future__ import annotations

import enum
import logging
from functools import partial
from dataclasses import dataclass, field, replace

from ..crypto.hashing import pseudonym_of
from ..crypto.signing import SigningKeyPair, sign, verify
from ..errors import (
    InvalidTransaction,
    MalformedKey,
    SchemaViolation,
    TimestampRegression,
    WrongAuthority,
)
from .model import GENESIS_PARENT, Block, Chain, Transaction, TxKind, check_payload
from .merkle import merkle_root

log = logging.getLogger(__name__)


class Reason(str, enum.Enum):
    PARENT_LINKAGE = "ParentLinkage"
    HEIGHT_MISMATCH = "HeightMismatch"
    MERKLE_MISMATCH = "MerkleMismatch"
    WRONG_AUTHORITY = "WrongAuthority"
    BAD_AUTHORITY_SIGNATURE = "BadAuthoritySignature"
    BAD_SIGNATURE = "BadSignature"
    SCHEMA_VIOLATION = "SchemaViolation"
    AUTHOR_MISMATCH = "AuthorMismatch"
    UNREGISTERED = "UnregisteredPseudonym"
    NOT_RECORD_OWNER = "NotRecordOwner"
    ANCHOR_CONFLICT = "AnchorConflict"
    NONCE_NOT_INCREASING = "NonceNotIncreasing"
    TIMESTAMP_REGRESSION = "TimestampRegression"


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    height: int | None = None
    reason: Reason | None = None
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "height": self.height,
            "reason": self.reason.value if self.reason else None,
            "detail": self.detail,
        }


@dataclass
class LedgerState:
    """Cross-transaction facts needed to judge the next transaction."""

    nonces: dict[bytes, int] = field(default_factory=dict)
    registered: dict[str, bytes] = field(default_factory=dict)
    owners: dict[str, str] = field(default_factory=dict)

    @classmethod
    def of(cls, chain: Chain) -> "LedgerState":
        state = cls()
        for _, _, tx in chain.iter_transactions():
            state.apply(tx)
        return state

    def check(self, tx: Transaction) -> tuple[Reason, str] | None:
        """Return the first rule ``tx`` breaks, or ``None``."""
        try:
            ok = verify(tx.signature, tx.signing_bytes(), tx.author_public)
        except MalformedKey:
            ok = False
        if not ok:
            return Reason.BAD_SIGNATURE, "signature does not verify under author_public"
        try:
            check_payload(tx.kind, tx.payload)
        except SchemaViolation as exc:
            return Reason.SCHEMA_VIOLATION, str(exc)

        pseudonym = tx.payload["patient_pseudonym"]
        if pseudonym != pseudonym_of(tx.author_public):
            return Reason.AUTHOR_MISMATCH, "patient_pseudonym is not derived from the author key"
        if tx.kind is not TxKind.IDENTITY_ATTESTATION and pseudonym not in self.registered:
            return Reason.UNREGISTERED, f"pseudonym {pseudonym} has no identity attestation"
        if tx.kind is TxKind.RECORD_ANCHOR:
            owner = self.owners.get(tx.payload["cid"])
            if owner is not None and owner != pseudonym:
                return Reason.ANCHOR_CONFLICT, "cid already anchored by another patient"
        elif tx.kind in (TxKind.CONSENT_GRANT, TxKind.CONSENT_REVOKE):
            if self.owners.get(tx.payload["record_cid"]) != pseudonym:
                return Reason.NOT_RECORD_OWNER, "record_cid is not anchored by this patient"

        last = self.nonces.get(tx.author_public)
        if last is not None and tx.nonce <= last:
            return Reason.NONCE_NOT_INCREASING, f"nonce {tx.nonce} after {last}"
        return None

    def apply(self, tx: Transaction) -> None:
        self.nonces[tx.author_public] = tx.nonce
        pseudonym = tx.payload.get("patient_pseudonym")
        if tx.kind is TxKind.IDENTITY_ATTESTATION:
            self.registered.setdefault(pseudonym, tx.author_public)
        elif tx.kind is TxKind.RECORD_ANCHOR:
            self.owners.setdefault(tx.payload["cid"], pseudonym)


def sign_transaction(kind: TxKind, payload: dict, nonce: int, author: SigningKeyPair) -> Transaction:
    unsigned = Transaction(kind, author.public, payload, nonce)
    return Transaction(kind, author.public, payload, nonce, sign(unsigned.signing_bytes(), author))


def next_nonce(chain: Chain, author_public: bytes, pending=()) -> int:
    """One past the author's highest nonce on chain or in ``pending``."""
    last = -1
    for _, _, tx in chain.iter_transactions():
        if tx.author_public == author_public:
            last = max(last, tx.nonce)
    for tx in pending:
        if tx.author_public == author_public:
            last = max(last, tx.nonce)
    return last + 1


def build_block(chain: Chain, txs, timestamp: int, authority_secret: SigningKeyPair) -> Block:
    """The unique valid next block carrying ``txs``, signed by the scheduled authority."""
    height = chain.next_height
    expected = chain.authorities[chain.authority_for(height)]
    if authority_secret.public != expected:
        raise WrongAuthority(f"height {height} belongs to authority {chain.authority_for(height)}")
    tip = chain.tip
    if tip is not None and timestamp < tip.timestamp:
        raise TimestampRegression(f"timestamp {timestamp} before tip {tip.timestamp}")
    if timestamp < 0:
        raise TimestampRegression("timestamps are non-negative")

    txs = tuple(txs)
    state = LedgerState.of(chain)
    for i, tx in enumerate(txs):
        problem = state.check(tx)
        if problem:
            raise InvalidTransaction(problem[0].value, f"tx {i}: {problem[1]}")
        state.apply(tx)

    unsigned = Block(
        height=height,
        parent=tip.digest() if tip is not None else GENESIS_PARENT,
        merkle_root=merkle_root([tx.leaf() for tx in txs]),
        timestamp=timestamp,
        authority_index=chain.authority_for(height),
        transactions=txs,
    )
    return replace(unsigned, authority_signature=sign(unsigned.header_bytes(), authority_secret))


def append_block(chain: Chain, block: Block) -> Chain:
    """New chain value with ``block`` on top. Linkage is checked, nothing else."""
    tip = chain.tip
    parent = tip.digest() if tip is not None else GENESIS_PARENT
    if block.parent != parent or block.height != chain.next_height:
        raise ValueError("block does not extend this chain")
    return Chain(chain.authorities, chain.blocks + (block,))


def _invalid(height: int, reason: Reason, detail: str = "") -> ValidationReport:
    log.debug("chain invalid at %d: %s %s", height, reason.value, detail)
    return ValidationReport(False, height, reason, detail)


def validate_chain(chain: Chain) -> ValidationReport:
    """Check every block in order and report the first violation."""
    state = LedgerState()
    parent = GENESIS_PARENT
    last_ts = 0
    for position, block in enumerate(chain.blocks):
        bad = partial(_invalid, position)
        if block.parent != parent:
            return bad(Reason.PARENT_LINKAGE, "parent digest does not match predecessor")
        if block.height != position:
            return bad(Reason.HEIGHT_MISMATCH, f"height {block.height} at position {position}")
        if block.computed_merkle_root() != block.merkle_root:
            return bad(Reason.MERKLE_MISMATCH)
        if block.authority_index != chain.authority_for(position):
            return bad(Reason.WRONG_AUTHORITY, f"authority {block.authority_index} out of turn")
        authority = chain.authorities[block.authority_index]
        if not verify(block.authority_signature, block.header_bytes(), authority):
            return bad(Reason.BAD_AUTHORITY_SIGNATURE)
        for i, tx in enumerate(block.transactions):
            problem = state.check(tx)
            if problem:
                return bad(problem[0], f"tx {i}: {problem[1]}")
            state.apply(tx)
        if block.timestamp < last_ts:
            return bad(Reason.TIMESTAMP_REGRESSION)
        parent = block.digest()
        last_ts = block.timestamp
    return ValidationReport(True)


def transactions_by_author(chain: Chain, author_public: bytes) -> list[tuple[int, int, Transaction]]:
    return [(h, i, tx) for h, i, tx in chain.iter_transactions() if tx.author_public == author_public]


class Consortium:
    """The authority key set, handing each height to its scheduled signer."""

    def __init__(self, keypairs) -> None:
        self.keypairs = tuple(keypairs)
        if not self.keypairs:
            raise ValueError("a consortium needs at least one authority")

    @property
    def publics(self) -> tuple[bytes, ...]:
        return tuple(k.public for k in self.keypairs)

    def genesis(self) -> Chain:
        chain = Chain(self.publics)
        return self.seal(chain, (), 0)

    def seal(self, chain: Chain, txs, timestamp: int) -> Chain:
        signer = self.keypairs[chain.authority_for(chain.next_height)]
        return append_block(chain, build_block(chain, txs, timestamp, signer))
