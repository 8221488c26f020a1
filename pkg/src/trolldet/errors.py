"""Shared exception types.

ValidationError covers anything wrong with user-supplied data or options
(exit code 1 at the CLI); unexpected conditions surface as ordinary
exceptions (exit code 2).
"""


class ValidationError(ValueError):
    """Bad input data, bad configuration, or a contract violation."""


class SchemaMismatchError(ValidationError):
    """An artifact was produced under a different feature schema."""


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name for the operator."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
