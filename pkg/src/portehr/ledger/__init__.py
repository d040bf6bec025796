"""Append-only proof-of-authority ledger anchoring digests and consent events."""

from .canonical import canonical_decode, canonical_encode
from .chain import (
    Consortium,
    LedgerState,
    Reason,
    ValidationReport,
    append_block,
    build_block,
    next_nonce,
    sign_transaction,
    transactions_by_author,
    validate_chain,
)
from .files import read_chain, write_chain
from .merkle import merkle_root
from .model import GENESIS_PARENT, Block, Chain, Transaction, TxKind, check_payload

__all__ = [
    "GENESIS_PARENT",
    "Block",
    "Chain",
    "Consortium",
    "LedgerState",
    "Reason",
    "Transaction",
    "TxKind",
    "ValidationReport",
    "append_block",
    "build_block",
    "canonical_decode",
    "canonical_encode",
    "check_payload",
    "merkle_root",
    "next_nonce",
    "read_chain",
    "sign_transaction",
    "transactions_by_author",
    "validate_chain",
    "write_chain",
]
