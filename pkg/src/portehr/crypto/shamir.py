"""Byte-wise k-of-n Shamir secret sharing over GF(256).

Every byte of the secret is the constant term of its own random polynomial of
degree k-1; share ``i`` holds that polynomial evaluated at ``x = i`` for each
byte position. Randomness comes from a SHAKE-256 stream keyed by a 64-bit
seed, so splitting is reproducible.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

from ..errors import (
    DuplicateShareIndex,
    EmptySecret,
    InvalidParams,
    LengthMismatch,
    ShareThresholdNotMet,
)
from .field import EXP, LOG, gf256_div, gf256_mul, poly_eval

MAX_SHARES = 255
_STREAM_DOMAIN = b"portehr/shamir/v1"


@dataclass(frozen=True)
class ShamirParams:
    k: int
    n: int

    def __post_init__(self) -> None:
        if not (isinstance(self.k, int) and isinstance(self.n, int)):
            raise InvalidParams("k and n must be integers")
        if self.k < 1:
            raise InvalidParams(f"threshold k={self.k} must be at least 1")
        if self.n > MAX_SHARES:
            raise InvalidParams(f"n={self.n} exceeds {MAX_SHARES}")
        if self.k > self.n:
            raise InvalidParams(f"threshold k={self.k} exceeds share count n={self.n}")


@dataclass(frozen=True)
class KeyShare:
    index: int
    values: bytes

    def __post_init__(self) -> None:
        if not 1 <= self.index <= MAX_SHARES:
            raise InvalidParams(f"share index {self.index} outside 1..{MAX_SHARES}")

    def __repr__(self) -> str:
        return f"KeyShare(index={self.index}, len={len(self.values)})"

    def to_json(self) -> dict:
        return {"index": self.index, "values": self.values.hex()}

    @classmethod
    def from_json(cls, obj: dict) -> "KeyShare":
        try:
            index, values = obj["index"], obj["values"]
        except (KeyError, TypeError) as exc:
            raise InvalidParams(f"share object missing field: {exc}") from None
        if not isinstance(index, int) or isinstance(index, bool):
            raise InvalidParams("share index must be an integer")
        if not isinstance(values, str) or values != values.lower():
            raise InvalidParams("share values must be lowercase hex")
        try:
            raw = bytes.fromhex(values)
        except ValueError:
            raise InvalidParams("share values are not valid hex") from None
        return cls(index, raw)


def coefficient_stream(rng_seed: int, length: int) -> bytes:
    """``length`` pseudo-random bytes determined by ``rng_seed``."""
    if not 0 <= rng_seed < 2**64:
        raise InvalidParams("rng_seed must be an unsigned 64-bit integer")
    return hashlib.shake_256(_STREAM_DOMAIN + rng_seed.to_bytes(8, "big")).digest(length)


def shamir_split(secret: bytes, params: ShamirParams, rng_seed: int) -> list[KeyShare]:
    """Split ``secret`` into ``params.n`` shares, any ``params.k`` of which recover it.

    Coefficients for byte position ``j`` are stream bytes
    ``[j*(k-1), (j+1)*(k-1))`` taken in ascending degree order.
    """
    if not secret:
        raise EmptySecret("cannot share an empty secret")
    k, n = params.k, params.n
    degree = k - 1
    stream = coefficient_stream(rng_seed, len(secret) * degree)
    columns = []
    for j, byte in enumerate(secret):
        coeffs = (byte, *stream[j * degree:(j + 1) * degree])
        columns.append([poly_eval(coeffs, x) for x in range(1, n + 1)])
    return [KeyShare(x, bytes(col[x - 1] for col in columns)) for x in range(1, n + 1)]


@lru_cache(maxsize=4096)
def lagrange_at_zero(indices: tuple[int, ...]) -> tuple[int, ...]:
    """Lagrange basis weights ``l_i(0)`` for the given abscissas.

    In characteristic 2 subtraction is XOR, so ``l_i(0) = prod x_j / (x_j ^ x_i)``.
    """
    weights = []
    for i, xi in enumerate(indices):
        num, den = 1, 1
        for j, xj in enumerate(indices):
            if i != j:
                num = gf256_mul(num, xj)
                den = gf256_mul(den, xj ^ xi)
        weights.append(gf256_div(num, den))
    return tuple(weights)


def shamir_reconstruct(shares: Iterable[KeyShare], k: int) -> bytes:
    """Recover the secret from at least ``k`` shares.

    Exactly the first ``k`` shares (in the order given) are interpolated;
    the rest are only checked for index uniqueness and length.
    """
    shares = list(shares)
    if k < 1:
        raise InvalidParams(f"threshold k={k} must be at least 1")
    if len(shares) < k:
        raise ShareThresholdNotMet(f"need {k} shares, got {len(shares)}")
    seen: set[int] = set()
    for s in shares:
        if s.index in seen:
            raise DuplicateShareIndex(f"share index {s.index} appears twice")
        seen.add(s.index)
    length = len(shares[0].values)
    if any(len(s.values) != length for s in shares):
        raise LengthMismatch("share value lengths differ")

    chosen = shares[:k]
    weights = lagrange_at_zero(tuple(s.index for s in chosen))
    # pre-take logs of the weights so the inner loop is a table lookup per byte
    weight_logs = [LOG[w] for w in weights]
    out = bytearray(length)
    for share, wl in zip(chosen, weight_logs):
        for pos, y in enumerate(share.values):
            if y:
                out[pos] ^= EXP[LOG[y] + wl]
    return bytes(out)
