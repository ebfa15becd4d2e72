"""Exceptions raised by the workbench services.

Services raise these; only the CLI turns them into exit codes.
"""


class WorkbenchError(Exception):
    """Base class for every workbench failure."""

    exit_code: int = 2


class PatternTooLargeError(WorkbenchError):
    pass


class InstanceTooLargeError(WorkbenchError):
    pass


class SizeGuardError(InstanceTooLargeError):
    pass


class SizeMismatchError(WorkbenchError):
    pass


class PreconditionError(WorkbenchError):
    pass


class InvalidSetError(PreconditionError):
    pass


class CopyWithOneEdgeError(PreconditionError):
    pass


class TargetBoundTooLargeError(WorkbenchError):
    pass


class DomainError(WorkbenchError):
    pass


class SampleSizeZeroError(PreconditionError):
    pass


class EmptyPartError(PreconditionError):
    pass


class NoNearlyBisectedPartError(WorkbenchError):
    """No part is nearly bisected, so the two-stage law mu is undefined."""


class SubspaceMismatchError(SizeMismatchError):
    pass


class SpaceMismatchError(SizeMismatchError):
    pass


class NonLinearMapError(PreconditionError):
    pass


class TargetNotTriangleFreeError(PreconditionError):
    pass


class UnsupportedPrimeError(DomainError):
    pass


class UnknownPresetError(WorkbenchError):
    pass


class InvalidParamsError(WorkbenchError):
    pass


class ParseError(WorkbenchError):
    """Malformed input file; ``line`` is 1-based (0 when not line-specific)."""

    def __init__(self, message: str, line: int = 0) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)
