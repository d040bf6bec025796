"""Scenario files: patient stories as replayable, machine-checked step lists.

A scenario declares a consortium size, storage nodes, the parties (GPs,
hospitals, relatives) that may hold shares or receive grants, and an ordered
list of steps. Every mutating step seals exactly one block at the step's
logical time. ``expect`` steps pin the outcome of an earlier step, the
patient's audit log, journey evidence or chain validity.

Outcomes are strings: a success word (``Registered``, ``Published``,
``Opened`` ...), a consent denial reason (``NoGrant``, ``Revoked``,
``Expired``) or the class name of the error a step raised.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..consent import audit_log, make_grant_tx, make_revoke_tx
from ..crypto import KeyShare, SigningKeyPair, content_hash
from ..errors import PortEHRError, ScenarioParseError, StepFailure
from ..ledger import Chain, Consortium, canonical_encode, next_nonce, validate_chain, write_chain
from ..portability import (
    AccessDenied,
    Custodian,
    MedicalRecord,
    PatientIdentity,
    PublishedRecord,
    collect_shares,
    identity_attestation_tx,
    journey_evidence,
    open_record,
    publish_record,
    pseudonymize_record,
    register_patient,
    request_access,
)
from ..portability.workflow import record_count
from ..storage import Cluster

log = logging.getLogger(__name__)

_TOP_KEYS = {"name", "seed", "authorities", "storage_nodes", "replication", "parties", "steps", "description"}
_COMMON = {"op", "id", "at", "note"}

# op -> (required, optional)
_STEP_FIELDS: dict[str, tuple[set[str], set[str]]] = {
    "register_patient": ({"patient", "name", "country"}, {"guardian"}),
    "publish_record": ({"patient", "record", "resource_type", "body", "custodians"}, {"k", "country", "local_id"}),
    "grant": ({"patient", "grantee", "record"}, {"purpose", "expires_at"}),
    "revoke": ({"patient", "grantee", "record"}, set()),
    "border_cross": ({"patient", "country"}, set()),
    "node_kill": ({"nodes"}, {"alive"}),
    "tamper": ({"target", "record"}, {"node", "offset", "holder", "byte"}),
    "request_access": ({"grantee", "record"}, {"custodians", "patient_share"}),
    "expect": (set(), {"step", "outcome", "audit", "journey", "chain_valid", "challenge"}),
}

OPENED = "Opened"


@dataclass(frozen=True)
class Step:
    id: str
    op: str
    at: int
    args: dict[str, Any]


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    authorities: int
    storage_nodes: tuple[str, ...]
    replication: int
    parties: tuple[tuple[str, str], ...]  # (party id, country)
    steps: tuple[Step, ...]


@dataclass
class ScenarioReport:
    scenario: str
    steps: list[dict] = field(default_factory=list)
    expectations: list[dict] = field(default_factory=list)
    final_chain_digest: str = ""

    @property
    def passed(self) -> bool:
        return all(e["pass"] for e in self.expectations)

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "steps": self.steps,
            "expectations": self.expectations,
            "final_chain_digest": self.final_chain_digest,
            "pass": self.passed,
        }


# -- parsing ----------------------------------------------------------------------

def _fail(msg: str) -> ScenarioParseError:
    return ScenarioParseError(msg)


def _int(value: Any, what: str, lo: int = 0, hi: int = 2**64 - 1) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or not lo <= value <= hi:
        raise _fail(f"{what} must be an integer in {lo}..{hi}")
    return value


def _str(value: Any, what: str) -> str:
    if not isinstance(value, str) or not value:
        raise _fail(f"{what} must be a non-empty string")
    return value


def _str_list(value: Any, what: str) -> list[str]:
    if not isinstance(value, list):
        raise _fail(f"{what} must be a list of strings")
    return [_str(v, what) for v in value]


def parse_scenario(obj: Any) -> Scenario:
    if not isinstance(obj, dict):
        raise _fail("scenario must be a JSON object")
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        raise _fail(f"unknown scenario keys: {sorted(unknown)}")
    for key in ("name", "seed", "steps"):
        if key not in obj:
            raise _fail(f"scenario is missing {key!r}")
    name = _str(obj["name"], "name")
    seed = _int(obj["seed"], "seed")
    authorities = _int(obj.get("authorities", 3), "authorities", 1, 64)

    nodes_raw = obj.get("storage_nodes", 3)
    if isinstance(nodes_raw, list):
        nodes = tuple(_str_list(nodes_raw, "storage_nodes"))
    else:
        nodes = tuple(f"node-{i}" for i in range(_int(nodes_raw, "storage_nodes", 1, 64)))
    if not nodes or len(set(nodes)) != len(nodes):
        raise _fail("storage node ids must be unique and non-empty")
    replication = _int(obj.get("replication", len(nodes)), "replication", 1, len(nodes))

    parties = []
    for p in obj.get("parties", []):
        if not isinstance(p, dict) or set(p) - {"id", "country"} or "id" not in p:
            raise _fail("each party is an object with 'id' and optional 'country'")
        parties.append((_str(p["id"], "party id"), p.get("country", "")))
    party_ids = {p for p, _ in parties}
    if len(party_ids) != len(parties):
        raise _fail("party ids must be unique")

    if not isinstance(obj["steps"], list):
        raise _fail("steps must be a list")
    steps: list[Step] = []
    seen_ids: set[str] = set()
    patients: set[str] = set()
    records: dict[str, str] = {}  # record label -> patient
    clock = 0
    for index, raw in enumerate(obj["steps"]):
        where = f"step {index}"
        if not isinstance(raw, dict) or "op" not in raw:
            raise _fail(f"{where}: must be an object with an 'op'")
        op = raw["op"]
        if op not in _STEP_FIELDS:
            raise _fail(f"{where}: unknown op {op!r}")
        required, optional = _STEP_FIELDS[op]
        keys = set(raw) - _COMMON
        if required - keys:
            raise _fail(f"{where}: {op} needs {sorted(required - keys)}")
        if keys - required - optional:
            raise _fail(f"{where}: {op} does not take {sorted(keys - required - optional)}")
        step_id = _str(raw.get("id", f"s{index}"), f"{where} id")
        if step_id in seen_ids:
            raise _fail(f"{where}: duplicate step id {step_id!r}")
        if "at" in raw:
            at = _int(raw["at"], f"{where} at")
            if at < clock:
                raise _fail(f"{where}: logical time {at} runs backwards from {clock}")
        else:
            at = clock + 1
        clock = at
        args = {k: v for k, v in raw.items() if k not in _COMMON}

        def party(ref: Any) -> None:
            if ref not in party_ids:
                raise _fail(f"{where}: unknown party {ref!r}")

        def patient(ref: Any) -> None:
            if ref not in patients:
                raise _fail(f"{where}: patient {ref!r} is not registered yet")

        def record(ref: Any) -> None:
            if ref not in records:
                raise _fail(f"{where}: record {ref!r} is not published yet")

        if op == "register_patient":
            if args["patient"] in patients:
                raise _fail(f"{where}: patient {args['patient']!r} registered twice")
            _str(args["patient"], "patient")
            _str(args["name"], "name")
            patients.add(args["patient"])
        elif op == "publish_record":
            patient(args["patient"])
            label = _str(args["record"], "record")
            if label in records:
                raise _fail(f"{where}: record {label!r} published twice")
            for c in _str_list(args["custodians"], "custodians"):
                party(c)
            if not isinstance(args["body"], dict):
                raise _fail(f"{where}: body must be an object")
            if "k" in args:
                _int(args["k"], "k", 1, 255)
            records[label] = args["patient"]
        elif op in ("grant", "revoke"):
            patient(args["patient"])
            party(args["grantee"])
            record(args["record"])
            if "expires_at" in args:
                _int(args["expires_at"], "expires_at")
        elif op == "border_cross":
            patient(args["patient"])
        elif op == "node_kill":
            for n in _str_list(args["nodes"], "nodes"):
                if n not in nodes:
                    raise _fail(f"{where}: unknown storage node {n!r}")
        elif op == "tamper":
            record(args["record"])
            if args["target"] == "storage":
                if args.get("node") not in nodes:
                    raise _fail(f"{where}: storage tamper needs a known 'node'")
            elif args["target"] == "share":
                if args.get("holder") != "patient":
                    party(args.get("holder"))
            else:
                raise _fail(f"{where}: tamper target is 'storage' or 'share'")
        elif op == "request_access":
            party(args["grantee"])
            record(args["record"])
            for c in _str_list(args.get("custodians", []), "custodians"):
                party(c)
        elif op == "expect":
            forms = [k for k in ("step", "audit", "journey", "chain_valid") if k in args]
            if len(forms) != 1:
                raise _fail(f"{where}: expect takes exactly one of step/audit/journey/chain_valid")
            if "step" in args:
                if args["step"] not in seen_ids:
                    raise _fail(f"{where}: expect names unknown or later step {args['step']!r}")
                _str(args.get("outcome"), f"{where} outcome")
            if "audit" in args:
                a = args["audit"]
                if not isinstance(a, dict) or set(a) != {"patient", "grantees"}:
                    raise _fail(f"{where}: audit expectation needs patient and grantees")
                patient(a["patient"])
                for g in _str_list(a["grantees"], "grantees"):
                    party(g)
            if "journey" in args:
                j = args["journey"]
                if not isinstance(j, dict) or set(j) != {"patient", "countries"}:
                    raise _fail(f"{where}: journey expectation needs patient and countries")
                patient(j["patient"])
                _str_list(j["countries"], "countries")
        seen_ids.add(step_id)
        steps.append(Step(step_id, op, at, args))
    return Scenario(name, seed, authorities, nodes, replication, tuple(parties), tuple(steps))


def load_scenario(path: str | Path) -> Scenario:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ScenarioParseError(f"cannot read scenario {path}: {exc}") from None
    return parse_scenario(obj)


# -- execution --------------------------------------------------------------------

def subseed(seed: int, *labels: str) -> int:
    """A 64-bit seed for one named role, fixed by the scenario seed."""
    digest = content_hash(canonical_encode([seed, *labels]))
    return int.from_bytes(digest[:8], "big")


@dataclass
class World:
    consortium: Consortium
    chain: Chain
    cluster: Cluster
    parties: dict[str, Custodian]
    patients: dict[str, PatientIdentity] = field(default_factory=dict)
    countries: dict[str, str] = field(default_factory=dict)
    records: dict[str, PublishedRecord] = field(default_factory=dict)
    plaintexts: list[bytes] = field(default_factory=list)

    def party_name(self, public_hex: str) -> str:
        for pid, party in self.parties.items():
            if party.public.hex() == public_hex:
                return pid
        return public_hex


def _fresh_world(sc: Scenario) -> World:
    con = Consortium([
        SigningKeyPair.from_secret(content_hash(b"portehr/authority/v1" + subseed(sc.seed, "authority", str(i))
                                                .to_bytes(8, "big")))
        for i in range(sc.authorities)
    ])
    parties = {pid: Custodian.from_seed(pid, subseed(sc.seed, "party", pid), country=country)
               for pid, country in sc.parties}
    return World(con, con.genesis(), Cluster(sc.storage_nodes, sc.replication), parties)


def _seal(world: World, tx, at: int) -> int:
    world.chain = world.consortium.seal(world.chain, [tx], at)
    return world.chain.tip.height


def _run_step(world: World, sc: Scenario, step: Step) -> tuple[str, dict]:
    a = step.args
    if step.op == "register_patient":
        patient = register_patient(a["name"], subseed(sc.seed, "patient", a["patient"]))
        height = _seal(world, identity_attestation_tx(patient, a["country"], next_nonce(world.chain, patient.public)),
                       step.at)
        world.patients[a["patient"]] = patient
        world.countries[a["patient"]] = a["country"]
        detail = {"pseudonym": patient.pseudonym, "height": height}
        if "guardian" in a:
            detail["guardian"] = a["guardian"]
        return "Registered", detail

    if step.op == "publish_record":
        patient = world.patients[a["patient"]]
        country = a.get("country", world.countries[a["patient"]])
        record = MedicalRecord(
            record_id=a.get("local_id", f"local-{a['record']}"),
            patient_name=patient.name,
            patient_ref="",
            country=country,
            issued_at=step.at,
            resource_type=a["resource_type"],
            body=a["body"],
        )
        index = record_count(world.chain, patient)
        world.plaintexts += [record.encode(), pseudonymize_record(record, patient, index).encode()]
        published, world.chain = publish_record(
            record, patient, [world.parties[c] for c in a["custodians"]], a.get("k"),
            world.chain, world.cluster, consortium=world.consortium, timestamp=step.at,
            seed=subseed(sc.seed, "shamir", step.id), country=country, record_index=index)
        world.records[a["record"]] = published
        return "Published", {"cid": published.cid.hex(), "k": published.params.k, "n": published.params.n,
                             "height": published.anchor_height}

    if step.op == "grant":
        patient = world.patients[a["patient"]]
        tx = make_grant_tx(patient, world.parties[a["grantee"]].public, world.records[a["record"]].cid,
                           a.get("purpose", "treatment"), a.get("expires_at", 0),
                           next_nonce(world.chain, patient.public))
        return "Granted", {"height": _seal(world, tx, step.at)}

    if step.op == "revoke":
        patient = world.patients[a["patient"]]
        tx = make_revoke_tx(patient, world.parties[a["grantee"]].public, world.records[a["record"]].cid,
                            next_nonce(world.chain, patient.public))
        return "Revoked", {"height": _seal(world, tx, step.at)}

    if step.op == "border_cross":
        patient = world.patients[a["patient"]]
        tx = identity_attestation_tx(patient, a["country"], next_nonce(world.chain, patient.public))
        height = _seal(world, tx, step.at)
        world.countries[a["patient"]] = a["country"]
        return "Crossed", {"country": a["country"], "height": height}

    if step.op == "node_kill":
        alive = bool(a.get("alive", False))
        for node in a["nodes"]:
            world.cluster.set_node_alive(node, alive)
        return ("NodesUp" if alive else "NodesDown"), {"nodes": list(a["nodes"])}

    if step.op == "tamper":
        published = world.records[a["record"]]
        if a["target"] == "storage":
            world.cluster.tamper(a["node"], published.cid, a.get("offset", 0))
            return "Tampered", {"node": a["node"]}
        holder = a["holder"]
        if holder == "patient":
            share = published.patient_share
        else:
            share = world.parties[holder].held_shares[published.cid]
        pos = a.get("byte", 0) % len(share.values)
        flipped = bytearray(share.values)
        flipped[pos] ^= 0x01
        bad = KeyShare(share.index, bytes(flipped))
        if holder == "patient":
            world.records[a["record"]] = PublishedRecord(
                published.cid, published.params, bad, published.custodian_ids,
                published.anchor_height, published.patient_pseudonym)
        else:
            world.parties[holder].held_shares[published.cid] = bad
        return "Tampered", {"holder": holder}

    if step.op == "request_access":
        published = world.records[a["record"]]
        outcome = request_access(world.parties[a["grantee"]], published, world.chain, step.at)
        if isinstance(outcome, AccessDenied):
            return outcome.reason, {}
        consenting = set(a.get("custodians", published.custodian_ids))
        holders = [world.parties[c] for c in published.custodian_ids]
        for c in holders:
            c.consenting = c.custodian_id in consenting
        try:
            shares = collect_shares(outcome, published.patient_share if a.get("patient_share", True) else None,
                                    holders)
        finally:
            for c in holders:
                c.consenting = True
        opened = open_record(outcome, shares, published, world.cluster)
        return OPENED, {"shares": len(shares), "record_id": opened.record_id}

    raise AssertionError(step.op)


def _check(world: World, step: Step, outcomes: dict[str, str]) -> dict:
    a = step.args
    challenge = a.get("challenge", "")
    if "step" in a:
        expected, actual = a["outcome"], outcomes[a["step"]]
        what = {"step": a["step"]}
    elif "audit" in a:
        patient = world.patients[a["audit"]["patient"]]
        events = audit_log(world.chain, patient.pseudonym)
        expected = sorted(set(a["audit"]["grantees"]))
        actual = sorted({world.party_name(e.grantee) for e in events})
        what = {"audit": a["audit"]["patient"]}
    elif "journey" in a:
        expected = list(a["journey"]["countries"])
        actual = journey_evidence(world.patients[a["journey"]["patient"]], world.chain).countries
        what = {"journey": a["journey"]["patient"]}
    else:
        expected = bool(a["chain_valid"])
        actual = validate_chain(world.chain).valid
        what = {"chain_valid": True}
    result = {"id": step.id, **what, "expected": expected, "actual": actual, "pass": expected == actual}
    if challenge:
        result["challenge"] = challenge
    return result


def _explicitly_expected(sc: Scenario) -> dict[str, set[str]]:
    allowed: dict[str, set[str]] = {}
    for step in sc.steps:
        if step.op == "expect" and "step" in step.args:
            allowed.setdefault(step.args["step"], set()).add(step.args["outcome"])
    return allowed


def execute(sc: Scenario) -> tuple[ScenarioReport, World]:
    """Run ``sc`` on a fresh world.

    Access requests with no explicit expectation are implicitly expected to
    open. Any other step that errors without an expectation naming that
    error raises StepFailure (its ``report`` holds the partial run).
    """
    world = _fresh_world(sc)
    report = ScenarioReport(sc.name)
    expected = _explicitly_expected(sc)
    outcomes: dict[str, str] = {}
    for step in sc.steps:
        if step.op == "expect":
            report.expectations.append(_check(world, step, outcomes))
            continue
        try:
            outcome, detail = _run_step(world, sc, step)
        except PortEHRError as exc:
            outcome, detail = exc.code, {"error": str(exc), "trust_property": exc.trust_property}
            if step.op != "request_access" and outcome not in expected.get(step.id, ()):
                report.steps.append({"id": step.id, "op": step.op, "at": step.at, "outcome": outcome,
                                     "detail": detail})
                report.final_chain_digest = world.chain.digest().hex()
                failure = StepFailure(f"step {step.id} ({step.op}) failed with {outcome}: {exc}")
                failure.report = report
                raise failure from exc
        log.info("%s %s -> %s", step.id, step.op, outcome)
        outcomes[step.id] = outcome
        report.steps.append({"id": step.id, "op": step.op, "at": step.at, "outcome": outcome, "detail": detail})
        if step.op == "request_access" and step.id not in expected:
            report.expectations.append({"id": step.id, "step": step.id, "expected": OPENED, "actual": outcome,
                                        "pass": outcome == OPENED, "implicit": True})
    report.final_chain_digest = world.chain.digest().hex()
    return report, world


def run_scenario(path: str | Path) -> ScenarioReport:
    return execute(load_scenario(path))[0]


def export_world(world: World, report: ScenarioReport, out_dir: str | Path) -> Path:
    """Write the chain file, store directory, manifests, share files and the report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_chain(world.chain, out / "chain.json")
    world.cluster.save(out / "store")
    for label, published in sorted(world.records.items()):
        rec_dir = out / "records" / label
        rec_dir.mkdir(parents=True, exist_ok=True)
        (rec_dir / "manifest.json").write_text(json.dumps(published.manifest(), indent=2))
        (rec_dir / "share-patient.json").write_text(json.dumps(published.patient_share.to_json()))
        for cid_holder in published.custodian_ids:
            share = world.parties[cid_holder].held_shares.get(published.cid)
            if share is not None:
                (rec_dir / f"share-{cid_holder}.json").write_text(json.dumps(share.to_json()))
    (out / "report.json").write_text(json.dumps(report.to_json(), indent=2))
    return out
