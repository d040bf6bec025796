"""AES-256-GCM envelope encryption with seed-derived nonces."""

from __future__ import annotations

from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from ..errors import AuthenticationFailure, MalformedKey
from .hashing import DIGEST_SIZE, content_hash
from .keys import SecretKey

NONCE_SIZE = 12
TAG_SIZE = 16
HEADER_SIZE = NONCE_SIZE + TAG_SIZE + DIGEST_SIZE
_NONCE_DOMAIN = b"portehr/nonce/v1"


@dataclass(frozen=True)
class EncryptedEnvelope:
    nonce: bytes
    ciphertext: bytes
    tag: bytes
    aad_digest: bytes

    def __post_init__(self) -> None:
        if len(self.nonce) != NONCE_SIZE or len(self.tag) != TAG_SIZE:
            raise ValueError("envelope nonce must be 12 bytes and tag 16 bytes")
        if len(self.aad_digest) != DIGEST_SIZE:
            raise ValueError("aad digest must be 32 bytes")

    def to_bytes(self) -> bytes:
        """The stored object: ``nonce || tag || aad_digest || ciphertext``."""
        return self.nonce + self.tag + self.aad_digest + self.ciphertext

    @classmethod
    def from_bytes(cls, data: bytes) -> "EncryptedEnvelope":
        if len(data) < HEADER_SIZE:
            raise AuthenticationFailure("envelope shorter than its fixed header")
        return cls(
            nonce=data[:NONCE_SIZE],
            tag=data[NONCE_SIZE:NONCE_SIZE + TAG_SIZE],
            aad_digest=data[NONCE_SIZE + TAG_SIZE:HEADER_SIZE],
            ciphertext=data[HEADER_SIZE:],
        )


def nonce_from_seed(nonce_seed: int) -> bytes:
    if not 0 <= nonce_seed < 2**64:
        raise ValueError("nonce_seed must be an unsigned 64-bit integer")
    return content_hash(_NONCE_DOMAIN + nonce_seed.to_bytes(8, "big"))[:NONCE_SIZE]


def _cipher(key: SecretKey) -> AESGCM:
    if not isinstance(key, SecretKey):
        raise MalformedKey("envelope key must be a SecretKey")
    return AESGCM(key.value)


def encrypt_envelope(plaintext: bytes, key: SecretKey, aad: bytes, nonce_seed: int) -> EncryptedEnvelope:
    nonce = nonce_from_seed(nonce_seed)
    sealed = _cipher(key).encrypt(nonce, plaintext, aad)
    return EncryptedEnvelope(
        nonce=nonce,
        ciphertext=sealed[:-TAG_SIZE],
        tag=sealed[-TAG_SIZE:],
        aad_digest=content_hash(aad),
    )


def decrypt_envelope(env: EncryptedEnvelope, key: SecretKey, aad: bytes) -> bytes:
    if content_hash(aad) != env.aad_digest:
        raise AuthenticationFailure("associated data does not match the envelope")
    try:
        return _cipher(key).decrypt(env.nonce, env.ciphertext + env.tag, aad)
    except InvalidTag:
        raise AuthenticationFailure("envelope failed authentication") from None
