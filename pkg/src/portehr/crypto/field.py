"""GF(2^8) arithmetic over the AES reduction polynomial x^8 + x^4 + x^3 + x + 1.

Addition is XOR. Multiplication goes through log/antilog tables built once
at import from the generator 0x03.
"""

from __future__ import annotations

AES_POLY = 0x11B
GENERATOR = 0x03


def _slow_mul(a: int, b: int) -> int:
    p = 0
    while b:
        if b & 1:
            p ^= a
        a <<= 1
        if a & 0x100:
            a ^= AES_POLY
        b >>= 1
    return p


def _build_tables() -> tuple[list[int], list[int]]:
    exp = [0] * 512
    log = [0] * 256
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x = _slow_mul(x, GENERATOR)
    # doubled so exp[log a + log b] never needs a modulo
    for i in range(255, 512):
        exp[i] = exp[i - 255]
    return exp, log


EXP, LOG = _build_tables()


def gf256_add(a: int, b: int) -> int:
    return a ^ b


def gf256_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def gf256_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(256)")
    return EXP[255 - LOG[a]]


def gf256_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("division by zero in GF(256)")
    if a == 0:
        return 0
    return EXP[LOG[a] + 255 - LOG[b]]


def poly_eval(coefficients: list[int] | tuple[int, ...], x: int) -> int:
    """Evaluate ``c0 + c1*x + ... `` at ``x`` (Horner, constant term first)."""
    acc = 0
    for c in reversed(coefficients):
        acc = gf256_mul(acc, x) ^ c
    return acc
