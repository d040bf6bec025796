from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

from ..crypto import derive_child_key
from ..ledger import canonical_decode, canonical_encode
from .identity import PatientIdentity

_FIELDS = ("record_id", "patient_name", "patient_ref", "country", "issued_at", "resource_type", "body")


@dataclass(frozen=True)
class MedicalRecord:
    """A flat, FHIR-flavoured health record. Plaintext: never stored as is."""

    record_id: str
    patient_name: str
    patient_ref: str
    country: str
    issued_at: int
    resource_type: str
    body: dict[str, str | int] = field(default_factory=dict, hash=False)

    def __post_init__(self) -> None:
        if not isinstance(self.issued_at, int) or isinstance(self.issued_at, bool) or self.issued_at < 0:
            raise ValueError("issued_at must be a non-negative integer")
        if not self.resource_type:
            raise ValueError("resource_type must be non-empty")
        for key, value in self.body.items():
            if not isinstance(key, str) or isinstance(value, bool) or not isinstance(value, (str, int)):
                raise ValueError(f"body field {key!r} must map a string to a string or integer")
        object.__setattr__(self, "body", dict(self.body))

    def to_json(self) -> dict[str, Any]:
        return {name: getattr(self, name) for name in _FIELDS}

    def encode(self) -> bytes:
        return canonical_encode(self.to_json())

    @classmethod
    def from_json(cls, obj: Any) -> "MedicalRecord":
        if not isinstance(obj, dict) or set(obj) != set(_FIELDS):
            raise ValueError("record object has wrong fields")
        return cls(**obj)

    @classmethod
    def decode(cls, data: bytes) -> "MedicalRecord":
        return cls.from_json(canonical_decode(data))


def pseudonymous_record_id(patient: PatientIdentity, record_index: int) -> str:
    return derive_child_key(patient.root, "rid", record_index).value[:16].hex()


def pseudonymize_record(record: MedicalRecord, patient: PatientIdentity, record_index: int) -> MedicalRecord:
    """Strip the direct identifiers; the body is passed through untouched."""
    if not record.patient_name:
        raise ValueError("record has no patient name to remove")
    return replace(
        record,
        patient_name="",
        patient_ref=patient.pseudonym,
        record_id=pseudonymous_record_id(patient, record_index),
    )
