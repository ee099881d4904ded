"""Exception hierarchy shared across the toolkit.

Every error raised by stagekit derives from StagekitError so callers can
catch toolkit failures without swallowing unrelated bugs.
"""


class StagekitError(Exception):
    """Base class for all stagekit errors."""


class InvalidInputError(StagekitError, ValueError):
    """An argument violates a documented precondition (bad dimensions,
    out-of-range value, degenerate image)."""


class EmptyMaskError(InvalidInputError):
    """A mask required to contain at least one foreground pixel is empty."""


class ParseError(StagekitError, ValueError):
    """A serialized artifact (catalog line, index file, checkpoint) could
    not be decoded. Carries the offending location when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IntegrityError(StagekitError, ValueError):
    """Structural constraint violated (duplicate ids, inconsistent counts)."""


class IngestionError(StagekitError):
    """An entry referenced by a catalog could not be loaded."""


class BackendUnavailableError(StagekitError):
    """A pluggable model backend (saliency network, feature extractor)
    cannot be loaded, typically because its weights file is missing."""


class DegenerateFeatureError(StagekitError, ValueError):
    """Feature extraction produced an all-zero vector that cannot be
    normalized."""


class MaskGenerationError(StagekitError, RuntimeError):
    """Free-form mask generation failed to satisfy its area bounds within
    the retry budget."""


class TrainingDivergedError(StagekitError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite loss at step {step}")


class ConfigurationError(StagekitError, ValueError):
    """A configuration record is self-inconsistent."""


class PoolEmptyError(StagekitError, RuntimeError):
    """A retrieval pool contains no eligible donors."""


class NumericalError(StagekitError, ArithmeticError):
    """A numerical routine failed beyond its documented stabilizers."""


class NotFoundError(StagekitError, KeyError):
    """A referenced study, pair, or resource does not exist."""


class ConflictError(StagekitError, RuntimeError):
    """An operation conflicts with existing state (duplicate vote,
    already-complete pair)."""
