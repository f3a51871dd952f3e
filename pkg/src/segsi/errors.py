"""Exception types shared across the package."""


class SegsiError(Exception):
    """Base class for all package errors."""


class FormatError(SegsiError):
    """A file does not match its expected on-disk format."""


class ValidationError(SegsiError):
    """A structure violates one of its invariants (e.g. layer shapes)."""


class NumericError(SegsiError):
    """A non-finite or degenerate value appeared where it must not."""


class ConsistencyError(SegsiError):
    """Internal bookkeeping produced a contradiction (indicates a bug)."""


class PathExplosionError(SegsiError):
    """The region sweep exceeded its step cap."""


class DegenerateRegionError(SegsiError):
    """The truncation region carries no usable probability mass."""
