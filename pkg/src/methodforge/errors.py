"""Exception hierarchy shared across the package."""

from __future__ import annotations


class MethodForgeError(Exception):
    """Base class for all package errors."""


class ValidationError(MethodForgeError):
    """A domain invariant was violated while constructing or checking a value."""


class DimensionMismatchError(MethodForgeError):
    """Feature vectors of different dimensions were combined."""


class PlacementError(MethodForgeError):
    """Tree placement advice referenced an unknown node."""


class UnknownMethodError(MethodForgeError):
    """A method id was not found in the repository."""


class UnknownNodeError(MethodForgeError):
    """A tree node id was not found."""


class RefinementCycleError(MethodForgeError):
    """Adding a refinement edge would create a cycle."""


class SelectionError(MethodForgeError):
    """select_best was called with no candidates."""


class ExtractionParseError(MethodForgeError):
    """The gateway reply to an extraction prompt could not be parsed."""


class TransportError(MethodForgeError):
    """A live gateway call failed after exhausting retries."""


class ConfigurationError(MethodForgeError):
    """Bad configuration, including HTTP 4xx responses from a live backend."""


class RankingError(MethodForgeError):
    """A ranking submission was malformed or duplicated."""


class SessionError(MethodForgeError):
    """A session or turn reference was invalid."""


class SnapshotError(MethodForgeError):
    """A repository snapshot could not be read or failed invariant checks."""


class SnapshotVersionError(SnapshotError):
    """The snapshot format version does not match this build; no migration."""


class ScenarioError(MethodForgeError):
    """An evaluation scenario file was malformed."""
