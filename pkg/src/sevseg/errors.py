"""Exception types shared across the toolkit."""


class SevsegError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(SevsegError):
    """A value violates a domain invariant (box geometry, class range, score range)."""


class DegenerateBoxError(ValidationError):
    """A box has no extent where a positive extent is required."""


class SchemaError(SevsegError):
    """A file does not match the expected schema; the message names the offending entry."""


class AugmentError(SevsegError):
    """An augmentation step failed (e.g. codec failure)."""


class LayoutError(SevsegError):
    """A synthetic scene does not fit inside the requested image."""
