"""Shared error types for the parking ledger stack."""


class SmartParkError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SmartParkError):
    """Input failed a precondition check (bad enum value, empty id, ...)."""


class ConfigurationError(SmartParkError):
    """A config file, rule set, or scenario is malformed."""


class CodecError(SmartParkError):
    """Canonical bytes could not be decoded."""


class IntegrityError(SmartParkError):
    """A block or chain failed hash/back-link verification."""


class AccessDeniedError(SmartParkError):
    """ACL evaluation denied the operation."""


class RejectedError(SmartParkError):
    """A transaction proposal was rejected (failed endorsement or timed out)."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class NotFoundError(SmartParkError):
    """Requested record does not exist."""


class StateError(SmartParkError):
    """Operation is invalid for the record's current state."""


class ConflictError(SmartParkError):
    """A uniqueness constraint (email, plate) is already taken."""


class AuthError(SmartParkError):
    """Credentials or token failed verification."""
