"""Exception types raised across the toolkit.

Every toolkit error derives from ``LrfrError`` so callers can catch the
whole family at pipeline boundaries while tests assert on the precise
class.
"""


class LrfrError(Exception):
    """Base class for all toolkit errors."""


# --- manifest / corpus ---

class ParseError(LrfrError):
    """Malformed manifest CSV: bad header, bad row, or invalid field."""


class DuplicateImageId(LrfrError):
    """Two manifest rows share an image_id."""


class DuplicateGallery(LrfrError):
    """A subject has more than one gallery row (watchlist protocol: exactly one)."""


class UnknownProbeSubject(LrfrError):
    """A probe subject has no gallery entry (closed-set violation)."""


# --- geometry ---

class InvalidRatio(LrfrError):
    """Box extension ratio must be > 0."""


class EmptyCrop(LrfrError):
    """Crop box rounds to zero width or height."""


# --- imaging ---

class InvalidDims(LrfrError):
    """Requested image dimensions are not positive."""


class DecodeError(LrfrError):
    """Image file could not be decoded."""


class UpscaleAsMatch(UserWarning):
    """Resolution matching asked to 'downsample' to a larger size than the source."""


# --- embedding I/O and backends ---

class BadMagic(LrfrError):
    """Embedding file does not start with the expected magic bytes."""


class VersionUnsupported(LrfrError):
    """Embedding file version is not supported by this reader."""


class TruncatedFile(LrfrError):
    """Embedding file ends before the declared record count."""


class DimMismatch(LrfrError):
    """Vector length disagrees with the declared dimension."""


class UnknownBackend(LrfrError):
    """Backend name is not registered."""


class MissingEmbedding(LrfrError):
    """File-backed backend has no vector for the requested image_id."""


# --- matcher ---

class DegenerateEmbedding(LrfrError):
    """Zero-variance vector: correlation distance is undefined for it."""


class DuplicateSubject(LrfrError):
    """Two gallery embeddings share a subject_id."""


# --- evaluation ---

class EmptyResults(LrfrError):
    """Metric requested over an empty result list."""


class InconsistentGallery(LrfrError):
    """Results rank different gallery sizes and cannot share one CMC."""


class SubsetTooLarge(LrfrError):
    """Requested subject subset exceeds the number of available subjects."""
