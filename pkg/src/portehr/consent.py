"""Consent as a fold over the ledger.

Grants and revocations are ordinary ledger transactions; the access decision
for a (grantee, record) pair at a logical time is a pure function of the
folded state. Events only count when signed by the patient who anchored the
record (signature checked here too), so the fold stays sound even on a
chain nobody validated.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

from .crypto.hashing import pseudonym_of
from .crypto.signing import verify
from .errors import MalformedKey, SchemaViolation
from .ledger import Block, Chain, Transaction, TxKind, check_payload, sign_transaction

if TYPE_CHECKING:
    from .portability import PatientIdentity

Pair = tuple[bytes, bytes]  # (grantee public key, record cid)


class Reason(str, enum.Enum):
    GRANTED = "Granted"
    NO_GRANT = "NoGrant"
    REVOKED = "Revoked"
    EXPIRED = "Expired"


@dataclass(frozen=True)
class AccessDecision:
    allow: bool
    reason: Reason

    def __post_init__(self) -> None:
        if self.allow != (self.reason is Reason.GRANTED):
            raise ValueError("allow must be true exactly when the reason is Granted")


@dataclass(frozen=True)
class ConsentState:
    # pair -> (expires_at, granted_at_height)
    active: dict[Pair, tuple[int, int]] = field(default_factory=dict)
    # pair -> height of the revocation that currently applies
    revoked: dict[Pair, int] = field(default_factory=dict)
    # cid -> pseudonym of the patient who anchored it first
    owners: dict[bytes, str] = field(default_factory=dict)

    def apply(self, height: int, tx: Transaction) -> "ConsentState":
        return _fold(self, [(height, tx)])

    def apply_block(self, block: Block) -> "ConsentState":
        return _fold(self, [(block.height, tx) for tx in block.transactions])


def _authentic(tx: Transaction) -> bool:
    """Well-formed, self-signed by the key its pseudonym is derived from."""
    try:
        check_payload(tx.kind, tx.payload)
        if tx.payload["patient_pseudonym"] != pseudonym_of(tx.author_public):
            return False
        return verify(tx.signature, tx.signing_bytes(), tx.author_public)
    except (SchemaViolation, MalformedKey):
        return False


def _fold(state: ConsentState, events: Iterable[tuple[int, Transaction]]) -> ConsentState:
    active, revoked, owners = dict(state.active), dict(state.revoked), dict(state.owners)
    for height, tx in events:
        if tx.kind is TxKind.IDENTITY_ATTESTATION:
            continue
        if not _authentic(tx):
            continue
        pseudonym = tx.payload["patient_pseudonym"]
        if tx.kind is TxKind.RECORD_ANCHOR:
            owners.setdefault(bytes.fromhex(tx.payload["cid"]), pseudonym)
            continue
        if tx.kind not in (TxKind.CONSENT_GRANT, TxKind.CONSENT_REVOKE):
            continue
        cid = bytes.fromhex(tx.payload["record_cid"])
        if owners.get(cid) != pseudonym:
            continue
        pair = (bytes.fromhex(tx.payload["grantee_public"]), cid)
        if tx.kind is TxKind.CONSENT_GRANT:
            active[pair] = (tx.payload["expires_at"], height)
            revoked.pop(pair, None)
        else:
            active.pop(pair, None)
            revoked[pair] = height
    return ConsentState(active, revoked, owners)


def replay_consent_state(chain: Chain) -> ConsentState:
    return _fold(ConsentState(), ((h, tx) for h, _, tx in chain.iter_transactions()))


def evaluate_access(state: ConsentState, grantee_public: bytes, record_cid: bytes, now: int) -> AccessDecision:
    pair = (grantee_public, record_cid)
    if pair in state.active:
        expires_at, _ = state.active[pair]
        if expires_at == 0 or now < expires_at:
            return AccessDecision(True, Reason.GRANTED)
        return AccessDecision(False, Reason.EXPIRED)
    if pair in state.revoked:
        return AccessDecision(False, Reason.REVOKED)
    return AccessDecision(False, Reason.NO_GRANT)


def make_grant_tx(patient: PatientIdentity, grantee_public: bytes, record_cid: bytes, purpose: str,
                  expires_at: int, nonce: int) -> Transaction:
    payload = {
        "patient_pseudonym": patient.pseudonym,
        "grantee_public": grantee_public.hex(),
        "record_cid": record_cid.hex(),
        "purpose": purpose,
        "expires_at": expires_at,
    }
    check_payload(TxKind.CONSENT_GRANT, payload)
    return sign_transaction(TxKind.CONSENT_GRANT, payload, nonce, patient.signing)


def make_revoke_tx(patient: PatientIdentity, grantee_public: bytes, record_cid: bytes,
                   nonce: int) -> Transaction:
    payload = {
        "patient_pseudonym": patient.pseudonym,
        "grantee_public": grantee_public.hex(),
        "record_cid": record_cid.hex(),
    }
    check_payload(TxKind.CONSENT_REVOKE, payload)
    return sign_transaction(TxKind.CONSENT_REVOKE, payload, nonce, patient.signing)


@dataclass(frozen=True)
class ConsentEvent:
    height: int
    tx_index: int
    kind: str
    grantee: str
    cid: str
    expires_at: int | None

    def to_json(self) -> dict:
        return {
            "height": self.height,
            "tx_index": self.tx_index,
            "kind": self.kind,
            "grantee": self.grantee,
            "cid": self.cid,
            "expires_at": self.expires_at,
        }


def audit_log(chain: Chain, patient_pseudonym: str) -> list[ConsentEvent]:
    """Every self-signed grant and revoke for the pseudonym, in chain order."""
    events = []
    for height, index, tx in chain.iter_transactions():
        if tx.kind not in (TxKind.CONSENT_GRANT, TxKind.CONSENT_REVOKE):
            continue
        if tx.payload.get("patient_pseudonym") != patient_pseudonym:
            continue
        if pseudonym_of(tx.author_public) != patient_pseudonym:
            continue
        events.append(ConsentEvent(height, index, tx.kind.value, tx.payload["grantee_public"],
                                   tx.payload["record_cid"], tx.payload.get("expires_at")))
    return events


def audit_log_jsonl(events: Iterable[ConsentEvent]) -> str:
    return "".join(json.dumps(e.to_json(), sort_keys=True) + "\n" for e in events)
