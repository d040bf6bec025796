"""In-process content-addressed store replicated over a list of nodes.

Objects are keyed by the SHA-256 of their bytes. A put lands on the first
``replication`` live nodes in node order; a get reads the first live holder
and re-hashes what it returns.
"""

from __future__ import annotations

import copy
import enum
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from .crypto.hashing import content_hash, from_hex
from .errors import CorruptObject, NoLiveNodes, NotFound, UnknownNode
from .ledger import Chain, TxKind

log = logging.getLogger(__name__)

_NODE_ID = re.compile(r"^[A-Za-z0-9._-]{1,32}$")


@dataclass
class StoreNode:
    node_id: str
    objects: dict[bytes, bytes] = field(default_factory=dict)
    alive: bool = True


class AnchorStatus(str, enum.Enum):
    OK = "Anchored"
    NOT_ANCHORED = "NotAnchored"
    NOT_RETRIEVABLE = "NotRetrievable"


@dataclass(frozen=True)
class AnchorCheck:
    ok: bool
    reason: AnchorStatus

    def __bool__(self) -> bool:
        return self.ok


class Cluster:
    def __init__(self, node_ids, replication: int) -> None:
        ids = list(node_ids)
        if not ids:
            raise ValueError("a cluster needs at least one node")
        if not all(_NODE_ID.match(i) for i in ids):
            raise ValueError("node ids are 1-32 characters of [A-Za-z0-9._-]")
        if len(set(ids)) != len(ids):
            raise ValueError("node ids must be unique")
        if not 1 <= replication <= len(ids):
            raise ValueError(f"replication must be in 1..{len(ids)}")
        self.nodes = [StoreNode(i) for i in ids]
        self.replication = replication

    def node(self, node_id: str) -> StoreNode:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise UnknownNode(node_id)

    def live_nodes(self) -> list[StoreNode]:
        return [n for n in self.nodes if n.alive]

    def put(self, data: bytes) -> bytes:
        live = self.live_nodes()
        if not live:
            raise NoLiveNodes("every storage node is down")
        cid = content_hash(data)
        for node in live[:self.replication]:
            node.objects[cid] = bytes(data)
        log.debug("stored %s on %s", cid.hex()[:12], [n.node_id for n in live[:self.replication]])
        return cid

    def get(self, cid: bytes) -> bytes:
        for node in self.nodes:
            if node.alive and cid in node.objects:
                data = node.objects[cid]
                if content_hash(data) != cid:
                    raise CorruptObject(f"node {node.node_id} returned bytes not matching {cid.hex()}")
                return data
        raise NotFound(cid.hex())

    def holders(self, cid: bytes) -> list[str]:
        return [n.node_id for n in self.nodes if cid in n.objects]

    def set_node_alive(self, node_id: str, alive: bool) -> "Cluster":
        self.node(node_id).alive = alive
        return self

    # fault injection

    def tamper(self, node_id: str, cid: bytes, offset: int = 0) -> None:
        """Flip the low bit of one stored byte in place."""
        node = self.node(node_id)
        if cid not in node.objects:
            raise NotFound(f"{cid.hex()} not on {node_id}")
        data = bytearray(node.objects[cid])
        data[offset % len(data)] ^= 0x01
        node.objects[cid] = bytes(data)

    def delete(self, cid: bytes) -> None:
        for node in self.nodes:
            node.objects.pop(cid, None)

    def snapshot(self) -> "Cluster":
        return copy.deepcopy(self)

    def all_objects(self):
        for node in self.nodes:
            yield from node.objects.values()

    # directory persistence: store/<node_id>/<cid hex>

    def save(self, root: str | Path) -> Path:
        root = Path(root)
        for node in self.nodes:
            node_dir = root / node.node_id
            node_dir.mkdir(parents=True, exist_ok=True)
            for cid, data in node.objects.items():
                (node_dir / cid.hex()).write_bytes(data)
        return root

    @classmethod
    def load(cls, root: str | Path, node_ids=None, replication: int | None = None) -> "Cluster":
        """Rebuild a cluster from a store directory; every node starts alive."""
        root = Path(root)
        ids = list(node_ids) if node_ids is not None else sorted(p.name for p in root.iterdir() if p.is_dir())
        cluster = cls(ids, replication or len(ids))
        for node in cluster.nodes:
            node_dir = root / node.node_id
            if not node_dir.is_dir():
                continue
            for path in sorted(node_dir.iterdir()):
                node.objects[from_hex(path.name, 32)] = path.read_bytes()
        return cluster


def put(cluster: Cluster, data: bytes) -> bytes:
    return cluster.put(data)


def get(cluster: Cluster, cid: bytes) -> bytes:
    return cluster.get(cid)


def set_node_alive(cluster: Cluster, node_id: str, alive: bool) -> Cluster:
    return cluster.set_node_alive(node_id, alive)


def verify_anchor(cluster: Cluster, chain: Chain, cid: bytes) -> AnchorCheck:
    anchored = any(tx.kind is TxKind.RECORD_ANCHOR and tx.payload.get("cid") == cid.hex()
                   for _, _, tx in chain.iter_transactions())
    if not anchored:
        return AnchorCheck(False, AnchorStatus.NOT_ANCHORED)
    try:
        cluster.get(cid)
    except (NotFound, CorruptObject):
        return AnchorCheck(False, AnchorStatus.NOT_RETRIEVABLE)
    return AnchorCheck(True, AnchorStatus.OK)
