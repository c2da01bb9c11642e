"""Exception taxonomy shared across the package.

Every domain failure raised here derives from PatchQcError so callers (and
the CLI) can catch one type; the subclasses say what went wrong, not where.
"""


class PatchQcError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PatchQcError):
    """Invalid parameter combination or missing required input."""


class FormatError(PatchQcError):
    """On-disk or wire data does not match its declared format."""


class IoError(PatchQcError):
    """Underlying file I/O failed."""


class BoundsError(PatchQcError):
    """Index outside its valid range."""


class ShapeError(PatchQcError):
    """Array shapes or dims records do not match."""


class CoverageError(PatchQcError):
    """Some pixel is covered by no folded patch."""


class EmptySegmentationError(PatchQcError):
    """Operation undefined on an empty segmentation."""


class ConflictError(PatchQcError):
    """Contradictory corrections were supplied for the same frame."""


class DegenerateError(PatchQcError):
    """Statistic undefined for the given inputs (e.g. single-class labels)."""
