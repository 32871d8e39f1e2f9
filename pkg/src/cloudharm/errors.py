"""Exception taxonomy shared by every pipeline stage.

The CLI maps these onto exit codes: UsageError -> 1, DataError (and
subclasses) -> 2, StorageError -> 3.
"""

from __future__ import annotations


class CloudHarmError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(CloudHarmError):
    """Caller asked for something nonsensical (bad flag, bad k, unknown collection)."""


class DataError(CloudHarmError):
    """Input data is syntactically or semantically unusable."""


class ParseError(DataError):
    """Document could not be parsed; message names the offending field or location."""


class ResolutionError(DataError):
    """A reference inside a document points at nothing (e.g. an undeclared group)."""


class ValidationError(DataError):
    """A constructed model violates its invariants."""


class ModificationError(DataError):
    """A what-if modification could not be applied; message carries the step index."""


class NotFoundError(DataError):
    """A requested stored object does not exist."""


class BuildError(DataError):
    """Cross-store join failed while assembling a model (dangling references)."""


class ResourceError(CloudHarmError):
    """A configured resource cap was exceeded (e.g. attack-path explosion)."""


class StorageError(CloudHarmError):
    """The document store failed at the I/O level; message carries the path."""
