"""Exception taxonomy shared by all docfusion modules.

The CLI maps these onto process exit codes: usage problems exit 1, data
and validation problems exit 2, numerical failures exit 3.
"""


class DocfusionError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(DocfusionError):
    """Input violates a documented precondition or invariant."""


class AlignmentError(ValidationError):
    """Feature rows cannot be matched one-to-one with a manifest."""


class FormatError(DocfusionError):
    """A file is not in the expected on-disk format (bad magic, version...)."""


class CorruptionError(FormatError):
    """A file has the right framing but an inconsistent or truncated payload."""


class IngestionError(DocfusionError):
    """A source image or feature source could not be read."""


class NumericalError(DocfusionError):
    """A numerical routine failed to converge or produced unusable output."""
