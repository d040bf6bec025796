import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from portehr.consent import (
    AccessDecision,
    ConsentState,
    Reason,
    audit_log,
    audit_log_jsonl,
    evaluate_access,
    make_grant_tx,
    make_revoke_tx,
    replay_consent_state,
)
from portehr.crypto import content_hash, verify
from portehr.errors import InvalidTransaction, SchemaViolation
from portehr.ledger import Chain, next_nonce, transactions_by_author
from portehr.portability import Custodian, identity_attestation_tx, register_patient

from acceptance_support import adversarial_stream_grants
from helpers import published_world


@pytest.fixture
def world():
    return published_world()


def seal(world, txs, ts):
    world["chain"] = world["consortium"].seal(world["chain"], txs, ts)
    return world["chain"]


def nonce(world):
    return next_nonce(world["chain"], world["patient"].public)


def test_grant_tx_signed_by_patient(world):
    p, gp, cid = world["patient"], world["custodians"][0], world["published"].cid
    tx = make_grant_tx(p, gp.public, cid, "treatment", 0, nonce(world))
    assert tx.author_public == p.public
    assert verify(tx.signature, tx.signing_bytes(), p.public)


def test_long_purpose_is_schema_violation(world):
    p, cid = world["patient"], world["published"].cid
    with pytest.raises(SchemaViolation):
        make_grant_tx(p, p.public, cid, "x" * 65, 0, 0)
    make_grant_tx(p, p.public, cid, "x" * 64, 0, 0)


def test_no_expiry_sentinel(world):
    p, gp, cid = world["patient"], world["custodians"][0], world["published"].cid
    chain = seal(world, [make_grant_tx(p, gp.public, cid, "treatment", 0, nonce(world))], 3)
    decision = evaluate_access(replay_consent_state(chain), gp.public, cid, 2**63)
    assert decision == AccessDecision(True, Reason.GRANTED)


def test_expiry_boundary_is_strict(world):
    p, gp, cid = world["patient"], world["custodians"][0], world["published"].cid
    chain = seal(world, [make_grant_tx(p, gp.public, cid, "treatment", 100, nonce(world))], 3)
    state = replay_consent_state(chain)
    assert evaluate_access(state, gp.public, cid, 99) == AccessDecision(True, Reason.GRANTED)
    assert evaluate_access(state, gp.public, cid, 100) == AccessDecision(False, Reason.EXPIRED)


def test_no_grant(world):
    state = replay_consent_state(world["chain"])
    d = evaluate_access(state, world["custodians"][0].public, world["published"].cid, 5)
    assert d == AccessDecision(False, Reason.NO_GRANT)


def test_revoke_after_grant(world):
    p, gp, cid = world["patient"], world["custodians"][0], world["published"].cid
    seal(world, [make_grant_tx(p, gp.public, cid, "treatment", 0, nonce(world))], 3)
    chain = seal(world, [make_revoke_tx(p, gp.public, cid, nonce(world))], 4)
    for now in (0, 4, 10**6):
        assert evaluate_access(replay_consent_state(chain), gp.public, cid, now).reason is Reason.REVOKED


def test_regrant_after_revoke(world):
    p, gp, cid = world["patient"], world["custodians"][0], world["published"].cid
    n = nonce(world)
    chain = seal(world, [make_grant_tx(p, gp.public, cid, "t", 0, n), make_revoke_tx(p, gp.public, cid, n + 1),
                         make_grant_tx(p, gp.public, cid, "t", 0, n + 2)], 3)
    state = replay_consent_state(chain)
    assert evaluate_access(state, gp.public, cid, 5).allow
    assert (gp.public, cid) not in state.revoked


def test_revoke_without_grant_only_records(world):
    p, gp, cid = world["patient"], world["custodians"][0], world["published"].cid
    before = replay_consent_state(world["chain"])
    chain = seal(world, [make_revoke_tx(p, gp.public, cid, nonce(world))], 3)
    after = replay_consent_state(chain)
    assert after.active == before.active == {}
    assert after.revoked == {(gp.public, cid): chain.tip.height}


def test_revoke_by_non_patient_rejected(world):
    p, gp, cid = world["patient"], world["custodians"][0], world["published"].cid
    impostor = register_patient("Mallory", 666)
    forged_identity = type("Forged", (), {"pseudonym": p.pseudonym, "signing": impostor.signing})()
    tx = make_revoke_tx(forged_identity, gp.public, cid, 0)
    with pytest.raises(InvalidTransaction) as info:
        seal(world, [tx], 3)
    assert info.value.reason == "AuthorMismatch"


def test_grant_then_revoke_in_one_block(world):
    p, gp, cid = world["patient"], world["custodians"][0], world["published"].cid
    n = nonce(world)
    chain = seal(world, [make_grant_tx(p, gp.public, cid, "t", 0, n), make_revoke_tx(p, gp.public, cid, n + 1)], 3)
    state = replay_consent_state(chain)
    assert (gp.public, cid) not in state.active
    assert evaluate_access(state, gp.public, cid, 3).reason is Reason.REVOKED


def test_empty_chain_replays_to_empty_state(world):
    assert replay_consent_state(Chain(world["consortium"].publics)) == ConsentState()


def test_access_decision_invariant():
    with pytest.raises(ValueError):
        AccessDecision(True, Reason.REVOKED)


@given(ops=st.lists(st.tuples(st.sampled_from(["grant", "revoke"]), st.integers(0, 2),
                              st.integers(0, 40), st.integers(1, 3)), min_size=1, max_size=12))
@settings(max_examples=25, deadline=None)
def test_incremental_fold_equals_full_replay(ops):
    w = published_world()
    p, cid = w["patient"], w["published"].cid
    grantees = [c.public for c in w["custodians"]] + [p.public]
    chain = w["chain"]
    n = next_nonce(chain, p.public)
    # group ops into blocks of variable size
    i, ts = 0, 3
    while i < len(ops):
        size = ops[i][3]
        txs = []
        for kind, g, exp, _ in ops[i:i + size]:
            if kind == "grant":
                txs.append(make_grant_tx(p, grantees[g], cid, "t", exp, n))
            else:
                txs.append(make_revoke_tx(p, grantees[g], cid, n))
            n += 1
        chain = w["consortium"].seal(chain, txs, ts)
        i += size
        ts += 1

    full = replay_consent_state(chain)
    incremental = ConsentState()
    for block in chain.blocks:
        incremental = incremental.apply_block(block)
    assert incremental == full
    for split in range(len(chain) + 1):
        state = replay_consent_state(chain.prefix(split))
        for block in chain.blocks[split:]:
            state = state.apply_block(block)
        assert state == full


def test_audit_log(world):
    p, cid = world["patient"], world["published"].cid
    a, b = world["custodians"]
    assert audit_log(world["chain"], "00" * 16) == []
    n = nonce(world)
    seal(world, [make_grant_tx(p, a.public, cid, "t", 0, n)], 3)
    chain = seal(world, [make_grant_tx(p, b.public, cid, "t", 50, n + 1), make_revoke_tx(p, a.public, cid, n + 2)], 4)
    events = audit_log(chain, p.pseudonym)
    assert [(e.kind, e.grantee, e.expires_at) for e in events] == [
        ("ConsentGrant", a.public.hex(), 0),
        ("ConsentGrant", b.public.hex(), 50),
        ("ConsentRevoke", a.public.hex(), None),
    ]
    authored = {(h, i) for h, i, _ in transactions_by_author(chain, p.public)}
    assert {(e.height, e.tx_index) for e in events} <= authored
    lines = audit_log_jsonl(events).splitlines()
    assert len(lines) == 3
    assert set(json.loads(lines[0])) == {"height", "tx_index", "kind", "grantee", "cid", "expires_at"}


def test_adversarial_streams_never_grant(world):
    """Smaller version of the acceptance sweep."""
    rng = random.Random(11)
    assert sum(adversarial_stream_grants(world, rng) for _ in range(50)) == 0
