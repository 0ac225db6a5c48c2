"""
Error types for cksc

Every library error derives from CkscError and carries the process exit code
the CLI reports for it:

- 2: validation and parse errors (bad shapes, ranges, files, schemas)
- 3: numeric failures (non-finite values, eigensolver failures)
- 4: integrity mismatches (model trained on a different kernel)
"""

from typing import Any, Dict, Optional


class CkscError(Exception):
    """Base class for all cksc errors."""

    exit_code = 1


class ValidationError(CkscError):
    """Input failed validation."""

    exit_code = 2


class DimensionError(ValidationError):
    """Array shapes or channel counts do not agree."""


class DomainError(ValidationError, ValueError):
    """A value lies outside the domain of an operation."""


class DegenerateBandwidthError(DomainError):
    """All pairwise distances are zero, so no Gaussian bandwidth exists."""


class ContractError(ValidationError):
    """A documented precondition of an operation was violated."""


class ConfigError(ValidationError):
    """Unknown configuration key or out-of-range value."""


class StratificationError(ValidationError):
    """A class is too small for the requested fold count."""


class SchemaError(ValidationError):
    """A serialized document is missing a field or has a malformed one."""

    def __init__(self, field: str, message: str):
        super().__init__(f"Invalid field '{field}': {message}")
        self.field = field


class ParseError(ValidationError):
    """A CSV file could not be parsed."""

    def __init__(self, path: Any, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class NumericError(CkscError):
    """A computation produced non-finite values or failed to converge."""

    exit_code = 3

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.context = context or {}


class IntegrityError(CkscError):
    """Model and kernel do not belong together."""

    exit_code = 4


class DeadAtomSignal(CkscError):
    """Raised when a dictionary atom is not used by any sparse code."""

    def __init__(self, atom: int):
        super().__init__(f"Atom {atom} is unused")
        self.atom = atom
