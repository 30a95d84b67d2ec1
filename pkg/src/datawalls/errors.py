"""Exception hierarchy shared across the package."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from datawalls.policy import ValidationReport


class DataWallsError(Exception):
    """Base class for every error raised by datawalls."""


# -- policy ---------------------------------------------------------------


class PolicyError(DataWallsError):
    pass


class UnknownRole(PolicyError, KeyError):
    pass


class UnknownUser(PolicyError, KeyError):
    pass


class UnknownObject(PolicyError, KeyError):
    pass


class ConflictingAssignment(PolicyError):
    """A user was asked to join a role on the other side of a wall."""


class ConflictingSwitch(PolicyError):
    """A role switch would cross a wall between conflicting classes."""


class ParseError(DataWallsError):
    """Malformed input document, positioned at 1-based ``line``/``column``."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class ValidationFailed(PolicyError):
    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__(report.render())


# -- walls ----------------------------------------------------------------


class WallError(DataWallsError):
    pass


class WidthMismatch(WallError, ValueError):
    pass


class DisjointnessBroken(WallError):
    """An update would put the same class on both sides of a wall."""


# -- checkpoint / store ---------------------------------------------------


class StaleDecision(DataWallsError):
    """The decision was computed against an older state version."""


class StorageFailure(DataWallsError, OSError):
    pass


# -- transform ------------------------------------------------------------


class TransformError(DataWallsError):
    pass


class EmptyDataset(TransformError, ValueError):
    pass


class MissingAction(TransformError):
    pass


class UnachievableK(TransformError):
    pass


class TierError(TransformError, ValueError):
    """Operation applied to a dataset of the wrong tier."""
