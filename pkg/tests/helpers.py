"""Shared builders for ledger-level tests."""

from __future__ import annotations

from portehr.crypto import SigningKeyPair, content_hash, pseudonym_of
from portehr.ledger import Consortium, TxKind, sign_transaction


def keypair(label: str) -> SigningKeyPair:
    return SigningKeyPair.from_secret(content_hash(b"test-key/" + label.encode()))


def consortium(size: int = 3) -> Consortium:
    return Consortium([keypair(f"authority-{i}") for i in range(size)])


def attest(author: SigningKeyPair, nonce: int, country: str = "NO"):
    return sign_transaction(TxKind.IDENTITY_ATTESTATION,
                            {"patient_pseudonym": pseudonym_of(author.public), "country": country},
                            nonce, author)


def anchor(author: SigningKeyPair, cid: bytes, nonce: int, country: str = "NO", custodians=("gp",)):
    return sign_transaction(TxKind.RECORD_ANCHOR, {
        "patient_pseudonym": pseudonym_of(author.public),
        "cid": cid.hex(),
        "k": len(custodians),
        "n": len(custodians) + 1,
        "custodians": list(custodians),
        "country": country,
    }, nonce, author)


def grant(author: SigningKeyPair, grantee: bytes, cid: bytes, nonce: int, expires_at: int = 0,
          purpose: str = "treatment"):
    return sign_transaction(TxKind.CONSENT_GRANT, {
        "patient_pseudonym": pseudonym_of(author.public),
        "grantee_public": grantee.hex(),
        "record_cid": cid.hex(),
        "purpose": purpose,
        "expires_at": expires_at,
    }, nonce, author)


def revoke(author: SigningKeyPair, grantee: bytes, cid: bytes, nonce: int):
    return sign_transaction(TxKind.CONSENT_REVOKE, {
        "patient_pseudonym": pseudonym_of(author.public),
        "grantee_public": grantee.hex(),
        "record_cid": cid.hex(),
    }, nonce, author)


def busy_chain(blocks: int = 10, authorities: int = 3):
    """Genesis plus ``blocks - 1`` blocks, each carrying a few transactions from
    two patients. Returns (chain, consortium, patients)."""
    con = consortium(authorities)
    alice, bob = keypair("alice"), keypair("bob")
    gp = keypair("gp")
    chain = con.genesis()
    nonces = {alice.public: 0, bob.public: 0}

    def nxt(kp):
        n = nonces[kp.public]
        nonces[kp.public] += 1
        return n

    chain = con.seal(chain, [attest(alice, nxt(alice)), attest(bob, nxt(bob), "PK")], 1)
    for h in range(2, blocks):
        cid_a = content_hash(f"a{h}".encode())
        cid_b = content_hash(f"b{h}".encode())
        txs = [anchor(alice, cid_a, nxt(alice)), anchor(bob, cid_b, nxt(bob), "PK"),
               grant(alice, gp.public, cid_a, nxt(alice), expires_at=100 + h)]
        if h % 2:
            txs.append(revoke(bob, gp.public, cid_b, nxt(bob)))
        chain = con.seal(chain, txs, 10 * h)
    return chain, con, (alice, bob)


def sample_record(name: str = "Anna Kalb", country: str = "NO", **body):
    from portehr.portability import MedicalRecord
    return MedicalRecord(
        record_id="hospital-local-0001",
        patient_name=name,
        patient_ref="",
        country=country,
        issued_at=10,
        resource_type="Observation",
        body=body or {"code": "COPD", "spo2": 93, "note": "mild exacerbation"},
    )


def published_world(n_custodians: int = 2, k=None, seed: int = 7):
    """A registered patient with one published record.

    Returns a dict with consortium, chain, cluster, patient, custodians,
    published and the original record.
    """
    from portehr.portability import Custodian, identity_attestation_tx, publish_record, register_patient
    from portehr.storage import Cluster

    con = consortium(2)
    patient = register_patient("Anna Kalb", 42)
    custodians = [Custodian.from_seed(f"gp-{i}", i) for i in range(n_custodians)]
    chain = con.seal(con.genesis(), [identity_attestation_tx(patient, "NO", 0)], 1)
    cluster = Cluster(["no-1", "no-2", "uk-1"], 3)
    record = sample_record()
    published, chain = publish_record(record, patient, custodians, k, chain, cluster,
                                      consortium=con, timestamp=2, seed=seed)
    return dict(consortium=con, chain=chain, cluster=cluster, patient=patient,
                custodians=custodians, published=published, record=record)
