"""Cryptographic primitives: GF(256) Shamir sharing, key tree, AEAD, hashing, signatures."""

from .envelope import EncryptedEnvelope, decrypt_envelope, encrypt_envelope, nonce_from_seed
from .field import gf256_add, gf256_div, gf256_inv, gf256_mul
from .hashing import content_hash, from_hex, pseudonym_of, to_hex
from .keys import KeyNode, SecretKey, derive_child_key, derive_path, root_from_seed
from .shamir import KeyShare, ShamirParams, shamir_reconstruct, shamir_split
from .signing import SigningKeyPair, sign, verify

__all__ = [
    "EncryptedEnvelope",
    "KeyNode",
    "KeyShare",
    "SecretKey",
    "ShamirParams",
    "SigningKeyPair",
    "content_hash",
    "decrypt_envelope",
    "derive_child_key",
    "derive_path",
    "encrypt_envelope",
    "from_hex",
    "gf256_add",
    "gf256_div",
    "gf256_inv",
    "gf256_mul",
    "nonce_from_seed",
    "pseudonym_of",
    "root_from_seed",
    "shamir_reconstruct",
    "shamir_split",
    "sign",
    "to_hex",
    "verify",
]
