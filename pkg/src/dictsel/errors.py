"""Exception types shared across the package."""


class DictselError(Exception):
    """Base class for all library-specific errors."""


class RankDeficient(DictselError):
    """A support submatrix is numerically rank deficient."""


class InvalidGroundSet(DictselError):
    """The candidate atom matrix failed validation (e.g. non-unit columns)."""


class DimensionMismatch(DictselError):
    """Atom blocks or data matrices disagree on the ambient dimension."""


class InvalidSide(DictselError):
    """A patch side length is unusable for the requested basis."""


class TooLarge(DictselError):
    """An exhaustive computation would exceed its enumeration guard."""


class UnsupportedConstraint(DictselError):
    """The requested selector cannot handle this sparsity family."""


class InfeasibleState(DictselError):
    """A support assignment violates its sparsity constraint."""


class InsufficientPatches(DictselError):
    """An image does not supply enough usable patches."""


class ParseError(DictselError):
    """A file or configuration document is malformed."""


class SchemaVersionMismatch(DictselError):
    """A serialized artifact was written by an incompatible schema version."""
