"""Exception hierarchy shared by every portehr module.

Each error carries a ``trust_property`` naming what broke (threshold,
integrity, availability, authorization, ...). Scenario reports use the class
name as the step outcome.
"""

from __future__ import annotations


class PortEHRError(Exception):
    trust_property = "general"

    @property
    def code(self) -> str:
        return type(self).__name__


# crypto

class InvalidParams(PortEHRError, ValueError):
    trust_property = "parameters"


class EmptySecret(PortEHRError, ValueError):
    trust_property = "parameters"


class ShareThresholdNotMet(PortEHRError):
    trust_property = "threshold"


class DuplicateShareIndex(PortEHRError, ValueError):
    trust_property = "threshold"


class LengthMismatch(PortEHRError, ValueError):
    trust_property = "threshold"


class LabelTooLong(PortEHRError, ValueError):
    trust_property = "key-derivation"


class AuthenticationFailure(PortEHRError):
    """Ciphertext, tag, associated data or key did not authenticate."""

    trust_property = "integrity"


class MalformedKey(PortEHRError, ValueError):
    trust_property = "authenticity"


# ledger

class NonCanonicalizable(PortEHRError, TypeError):
    trust_property = "encoding"


class MalformedBlock(PortEHRError, ValueError):
    trust_property = "integrity"


class WrongAuthority(PortEHRError):
    trust_property = "consensus"


class InvalidTransaction(PortEHRError):
    trust_property = "authenticity"

    def __init__(self, reason: str, detail: str = "") -> None:
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


class TimestampRegression(PortEHRError):
    trust_property = "ordering"


# storage

class NoLiveNodes(PortEHRError):
    trust_property = "availability"


class NotFound(PortEHRError, LookupError):
    trust_property = "availability"


class CorruptObject(PortEHRError):
    trust_property = "integrity"


class UnknownNode(PortEHRError, LookupError):
    trust_property = "configuration"


# consent / workflow

class SchemaViolation(PortEHRError, ValueError):
    trust_property = "data-minimization"


class InvalidThreshold(PortEHRError, ValueError):
    trust_property = "threshold"


class InvalidTicket(PortEHRError):
    trust_property = "authorization"


# cli

class ScenarioParseError(PortEHRError, ValueError):
    trust_property = "configuration"


class StepFailure(PortEHRError):
    trust_property = "execution"
