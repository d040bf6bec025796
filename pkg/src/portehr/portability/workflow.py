"""Publish a record, then let a consented party carry it across a border.

Publishing: pseudonymize -> encrypt under a per-record key from the patient's
key tree -> store the ciphertext -> split the key between the patient and the
custodians -> anchor the ciphertext digest on the ledger.

Opening: consent check -> collect shares -> reconstruct the key -> fetch and
re-hash the ciphertext -> decrypt.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from ..consent import AccessDecision, evaluate_access, replay_consent_state
from ..crypto import (
    EncryptedEnvelope,
    KeyShare,
    SecretKey,
    ShamirParams,
    decrypt_envelope,
    derive_child_key,
    encrypt_envelope,
    shamir_reconstruct,
    shamir_split,
)
from ..errors import AuthenticationFailure, InvalidParams, InvalidThreshold, InvalidTicket, MalformedKey
from ..ledger import Chain, Consortium, TxKind, next_nonce, sign_transaction, transactions_by_author
from ..storage import Cluster
from .identity import Custodian, PatientIdentity
from .records import MedicalRecord, pseudonymize_record

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PublishedRecord:
    cid: bytes
    params: ShamirParams
    patient_share: KeyShare
    custodian_ids: tuple[str, ...]
    anchor_height: int
    patient_pseudonym: str

    def manifest(self) -> dict:
        """The shareable description: no key material."""
        return {
            "cid": self.cid.hex(),
            "k": self.params.k,
            "n": self.params.n,
            "custodians": list(self.custodian_ids),
            "anchor_height": self.anchor_height,
            "patient_pseudonym": self.patient_pseudonym,
        }


def record_count(chain: Chain, patient: PatientIdentity) -> int:
    return sum(1 for _, _, tx in transactions_by_author(chain, patient.public)
               if tx.kind is TxKind.RECORD_ANCHOR)


def envelope_key(patient: PatientIdentity, record_index: int) -> SecretKey:
    return derive_child_key(patient.root, "rec", record_index)


def publish_record(
    record: MedicalRecord,
    patient: PatientIdentity,
    custodians: Sequence[Custodian],
    k: int | None,
    chain: Chain,
    cluster: Cluster,
    *,
    consortium: Consortium,
    timestamp: int,
    seed: int,
    country: str | None = None,
    record_index: int | None = None,
) -> tuple[PublishedRecord, Chain]:
    """Encrypt, store, share out and anchor ``record``.

    ``k`` defaults to ``n - 1`` (at least 1) where ``n = len(custodians) + 1``.
    ``seed`` drives the share polynomials; the envelope nonce is keyed by the
    record index, which is unique per envelope key.
    """
    n = len(custodians) + 1
    if k is None:
        k = max(1, n - 1)
    try:
        params = ShamirParams(k, n)
    except InvalidParams as exc:
        raise InvalidThreshold(str(exc)) from None
    if record_index is None:
        record_index = record_count(chain, patient)

    pseudonymous = pseudonymize_record(record, patient, record_index)
    key = envelope_key(patient, record_index)
    envelope = encrypt_envelope(pseudonymous.encode(), key, patient.aad, record_index)
    cid = cluster.put(envelope.to_bytes())

    shares = shamir_split(key.value, params, seed)
    anchor = sign_transaction(TxKind.RECORD_ANCHOR, {
        "patient_pseudonym": patient.pseudonym,
        "cid": cid.hex(),
        "k": params.k,
        "n": params.n,
        "custodians": [c.custodian_id for c in custodians],
        "country": country or record.country,
    }, next_nonce(chain, patient.public), patient.signing)
    chain = consortium.seal(chain, [anchor], timestamp)

    for custodian, share in zip(custodians, shares[1:]):
        custodian.held_shares[cid] = share
    log.info("published %s as %s (k=%d, n=%d)", pseudonymous.record_id, cid.hex()[:12], k, n)
    published = PublishedRecord(cid, params, shares[0], tuple(c.custodian_id for c in custodians),
                                chain.tip.height, patient.pseudonym)
    return published, chain


@dataclass(frozen=True)
class AccessTicket:
    grantee_public: bytes
    cid: bytes
    issued_at: int


@dataclass(frozen=True)
class AccessDenied:
    decision: AccessDecision

    @property
    def reason(self) -> str:
        return self.decision.reason.value


def request_access(grantee, published: PublishedRecord, chain: Chain, now: int) -> AccessTicket | AccessDenied:
    """Consult the consent state folded from ``chain``. ``grantee`` is any party with ``.public``."""
    decision = evaluate_access(replay_consent_state(chain), grantee.public, published.cid, now)
    if decision.allow:
        return AccessTicket(grantee.public, published.cid, now)
    return AccessDenied(decision)


def collect_shares(ticket: AccessTicket, patient_share: KeyShare | None,
                   custodians: Sequence[Custodian]) -> list[KeyShare]:
    shares = [patient_share] if patient_share is not None else []
    for custodian in custodians:
        if custodian.consenting and ticket.cid in custodian.held_shares:
            shares.append(custodian.held_shares[ticket.cid])
    return shares


def open_record(ticket: AccessTicket, shares: Sequence[KeyShare], published: PublishedRecord,
                cluster: Cluster) -> MedicalRecord:
    """Reconstruct, fetch, verify and decrypt.

    Raises ShareThresholdNotMet, NotFound/CorruptObject from storage, or
    AuthenticationFailure when the shares rebuild the wrong key.
    """
    if not isinstance(ticket, AccessTicket) or ticket.cid != published.cid:
        raise InvalidTicket("ticket does not cover this record")
    key_bytes = shamir_reconstruct(shares, published.params.k)
    try:
        key = SecretKey(key_bytes)
    except MalformedKey:
        raise AuthenticationFailure("shares reconstructed a key of the wrong size") from None
    envelope = EncryptedEnvelope.from_bytes(cluster.get(published.cid))
    plaintext = decrypt_envelope(envelope, key, bytes.fromhex(published.patient_pseudonym))
    return MedicalRecord.decode(plaintext)


@dataclass(frozen=True)
class JourneyEntry:
    height: int
    timestamp: int
    country: str
    kind: str


@dataclass(frozen=True)
class JourneyEvidence:
    entries: tuple[JourneyEntry, ...]

    @property
    def countries(self) -> list[str]:
        return [e.country for e in self.entries]


_JOURNEY_KINDS = (TxKind.IDENTITY_ATTESTATION, TxKind.RECORD_ANCHOR)


def journey_evidence(patient, chain: Chain) -> JourneyEvidence:
    """The patient's attestations and anchors in chain order, tagged by country."""
    timestamps = {b.height: b.timestamp for b in chain.blocks}
    entries = tuple(
        JourneyEntry(h, timestamps[h], tx.payload["country"], tx.kind.value)
        for h, _, tx in transactions_by_author(chain, patient.public)
        if tx.kind in _JOURNEY_KINDS
    )
    return JourneyEvidence(entries)
