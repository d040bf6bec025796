"""Ed25519 signatures (deterministic per RFC 8032)."""

from __future__ import annotations

from dataclasses import dataclass, field

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from ..errors import MalformedKey

PUBLIC_SIZE = 32
SECRET_SIZE = 32
SIGNATURE_SIZE = 64


@dataclass(frozen=True)
class SigningKeyPair:
    public: bytes
    secret: bytes = field(repr=False)

    @classmethod
    def from_secret(cls, secret: bytes) -> "SigningKeyPair":
        if not isinstance(secret, bytes) or len(secret) != SECRET_SIZE:
            raise MalformedKey(f"Ed25519 secret must be {SECRET_SIZE} bytes")
        public = Ed25519PrivateKey.from_private_bytes(secret).public_key()
        return cls(public.public_bytes(Encoding.Raw, PublicFormat.Raw), secret)


def sign(message: bytes, secret: bytes | SigningKeyPair) -> bytes:
    if isinstance(secret, SigningKeyPair):
        secret = secret.secret
    if not isinstance(secret, bytes) or len(secret) != SECRET_SIZE:
        raise MalformedKey(f"Ed25519 secret must be {SECRET_SIZE} bytes")
    return Ed25519PrivateKey.from_private_bytes(secret).sign(message)


def verify(signature: bytes, message: bytes, public: bytes) -> bool:
    """True iff ``signature`` is valid for ``message`` under ``public``.

    A mismatching or wrong-length signature is ``False``; only a public key
    that cannot be parsed raises ``MalformedKey``.
    """
    if not isinstance(public, bytes) or len(public) != PUBLIC_SIZE:
        raise MalformedKey(f"Ed25519 public key must be {PUBLIC_SIZE} bytes")
    try:
        key = Ed25519PublicKey.from_public_bytes(public)
    except ValueError as exc:
        raise MalformedKey(str(exc)) from None
    if len(signature) != SIGNATURE_SIZE:
        return False
    try:
        key.verify(signature, message)
    except InvalidSignature:
        return False
    return True
