"""Exception hierarchy shared by all quantann modules."""


class QuantAnnError(Exception):
    """Base class for every error raised by this package."""


# --- dataset / file format errors ---------------------------------------


class TruncatedRecord(QuantAnnError):
    """File length is not consistent with its per-record headers."""


class DimensionMismatch(QuantAnnError):
    """Two objects that must share a dimensionality do not."""


class NonPositiveDim(QuantAnnError):
    """A record header declares a dimension d <= 0."""


class ElementKindMismatch(QuantAnnError):
    """Dataset element kind does not match what the operation requires."""


# --- quantizer errors ----------------------------------------------------


class TooFewSamples(QuantAnnError):
    """Statistics estimation needs at least two vectors."""


# --- distance kernel errors ----------------------------------------------


class ZeroNorm(QuantAnnError):
    """Angular distance needs strictly positive vector norms."""


# --- search errors -------------------------------------------------------


class EmptyCorpus(QuantAnnError):
    """The operation needs at least one corpus vector."""


# --- benchmark errors ----------------------------------------------------


class LengthMismatch(QuantAnnError):
    """Expected and actual result sets disagree in shape."""


# --- serialized artifact errors ------------------------------------------


class BadMagic(QuantAnnError):
    """File does not start with the expected magic bytes."""


class UnsupportedVersion(QuantAnnError):
    """Params file carries a version or mode code this build cannot read."""


class TruncatedFile(QuantAnnError):
    """Params file ends before its declared payload."""


class VersionMismatch(QuantAnnError):
    """Index file version is not supported by this build."""


class Corrupt(QuantAnnError):
    """Index file contents fail structural validation."""
