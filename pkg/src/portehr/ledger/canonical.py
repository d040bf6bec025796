"""Canonical JSON: sorted keys, no whitespace, UTF-8, integers only."""

from __future__ import annotations

import json

from ..errors import NonCanonicalizable


def _check(value, path: str = "$") -> None:
    if value is None or isinstance(value, (bool, str)):
        return
    if isinstance(value, int):
        return
    if isinstance(value, float):
        raise NonCanonicalizable(f"float at {path}")
    if isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _check(item, f"{path}[{i}]")
        return
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise NonCanonicalizable(f"non-string key {key!r} at {path}")
            _check(item, f"{path}.{key}")
        return
    raise NonCanonicalizable(f"unsupported {type(value).__name__} at {path}")


def canonical_encode(value) -> bytes:
    _check(value)
    # sort_keys orders by code point, which is the canonical order here
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False,
                      allow_nan=False).encode("utf-8")


def _no_floats(text: str):
    raise NonCanonicalizable(f"float literal {text}")


def canonical_decode(data: bytes, *, strict: bool = True):
    """Parse canonical JSON. With ``strict`` the input must re-encode to
    exactly the same bytes, so every distinct byte string maps to a distinct
    value."""
    try:
        value = json.loads(data.decode("utf-8"), parse_float=_no_floats,
                           parse_constant=_no_floats)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise NonCanonicalizable(f"not JSON: {exc}") from None
    if strict and canonical_encode(value) != data:
        raise NonCanonicalizable("input is not in canonical form")
    return value
