"""Exception types and validation violation records shared across the package."""

from __future__ import annotations

from dataclasses import dataclass


class AcdcError(Exception):
    """Base class for all package errors."""


# -- file / data-contract errors -------------------------------------------

class MissingFile(AcdcError):
    pass


class ShapeMismatch(AcdcError):
    pass


class NonFiniteValue(AcdcError):
    pass


class DuplicateObjectId(AcdcError):
    pass


class UnresolvedSupport(AcdcError):
    pass


class ValidationFailed(AcdcError):
    """Raised when a fully parsed value still violates invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        head = "; ".join(str(v) for v in self.violations[:8])
        super().__init__(f"{len(self.violations)} violation(s): {head}")


# -- matching ---------------------------------------------------------------

class DimensionMismatch(AcdcError):
    pass


class EmptyCandidates(AcdcError):
    pass


class EmptyCategory(AcdcError):
    pass


class NoCandidateSatisfiesArticulation(AcdcError):
    pass


# -- geometry / scene generation ---------------------------------------------

class DegenerateInput(AcdcError):
    pass


class InvalidPolygon(AcdcError):
    pass


class DegenerateExtent(AcdcError):
    pass


class MissingRank(AcdcError):
    pass


# -- affordance ---------------------------------------------------------------

class NoHit(AcdcError):
    pass


class DegenerateRadius(AcdcError):
    pass


# -- metrics ------------------------------------------------------------------

class UnpairedObject(AcdcError):
    pass


@dataclass(frozen=True)
class Violation:
    """One invariant violation: machine-readable code plus the offending path."""

    code: str
    path: str
    message: str = ""

    def __str__(self) -> str:
        tail = f": {self.message}" if self.message else ""
        return f"{self.code}@{self.path}{tail}"
