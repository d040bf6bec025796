from __future__ import annotations

from dataclasses import dataclass, field

from ..crypto import KeyShare, SecretKey, SigningKeyPair, content_hash, derive_child_key, pseudonym_of
from ..crypto.keys import root_from_seed
from ..ledger import Transaction, TxKind, sign_transaction


@dataclass(frozen=True)
class PatientIdentity:
    """A patient's wallet: key-tree root, signing pair, and public pseudonym."""

    name: str
    root: SecretKey = field(repr=False)
    signing: SigningKeyPair = field(repr=False)
    pseudonym: str

    @property
    def public(self) -> bytes:
        return self.signing.public

    @property
    def aad(self) -> bytes:
        return bytes.fromhex(self.pseudonym)


def register_patient(name: str, key_seed: int) -> PatientIdentity:
    """Deterministic identity for ``key_seed``; the name is kept locally only."""
    root = root_from_seed(key_seed)
    signing = SigningKeyPair.from_secret(derive_child_key(root, "sign", 0).value)
    return PatientIdentity(name, root, signing, pseudonym_of(signing.public))


def identity_attestation_tx(patient: PatientIdentity, country: str, nonce: int) -> Transaction:
    """The transaction binding the patient's pseudonym to their key, seen in ``country``."""
    payload = {"patient_pseudonym": patient.pseudonym, "country": country}
    return sign_transaction(TxKind.IDENTITY_ATTESTATION, payload, nonce, patient.signing)


@dataclass
class Custodian:
    """A trusted party (GP, hospital, relative) that may hold key shares."""

    custodian_id: str
    signing: SigningKeyPair = field(repr=False)
    held_shares: dict[bytes, KeyShare] = field(default_factory=dict, repr=False)
    consenting: bool = True
    country: str = ""

    @property
    def public(self) -> bytes:
        return self.signing.public

    @classmethod
    def from_seed(cls, custodian_id: str, seed: int, country: str = "") -> "Custodian":
        secret = content_hash(b"portehr/custodian/v1" + seed.to_bytes(8, "big") + custodian_id.encode())
        return cls(custodian_id, SigningKeyPair.from_secret(secret), country=country)
