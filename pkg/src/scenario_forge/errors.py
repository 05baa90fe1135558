"""Exception hierarchy.

``InputError`` subclasses are problems with what the user handed us (CLI exit
code 1). ``InvariantViolation`` means the pipeline produced something it
should never produce (exit code 2).
"""

from __future__ import annotations


class ScenarioForgeError(Exception):
    pass


class InputError(ScenarioForgeError):
    pass


class TaxonomyError(InputError):
    pass


class ParseError(InputError):
    """A malformed alert record. ``record`` is the 1-based record number."""

    def __init__(self, message: str, record: int | None = None):
        self.record = record
        if record is not None:
            message = f"record {record}: {message}"
        super().__init__(message)


class UnknownAlertType(InputError):
    pass


class TargetMismatch(InputError):
    pass


class InvariantViolation(ScenarioForgeError):
    pass
