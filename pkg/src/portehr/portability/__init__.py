"""End-to-end record portability: registration, publication, consented access, journey evidence."""

from .identity import Custodian, PatientIdentity, identity_attestation_tx, register_patient
from .records import MedicalRecord, pseudonymize_record
from .workflow import (
    AccessDenied,
    AccessTicket,
    JourneyEntry,
    JourneyEvidence,
    PublishedRecord,
    collect_shares,
    envelope_key,
    journey_evidence,
    open_record,
    publish_record,
    request_access,
)

__all__ = [
    "AccessDenied",
    "AccessTicket",
    "Custodian",
    "JourneyEntry",
    "JourneyEvidence",
    "MedicalRecord",
    "PatientIdentity",
    "PublishedRecord",
    "collect_shares",
    "envelope_key",
    "identity_attestation_tx",
    "journey_evidence",
    "open_record",
    "publish_record",
    "pseudonymize_record",
    "register_patient",
    "request_access",
]
