class PatdivError(Exception):
    """Base class of every error raised by patdiv. Carries the CLI exit code."""

    exit_code = 1


class ValidationError(PatdivError, ValueError):
    exit_code = 2


class PatternGenerationError(PatdivError):
    exit_code = 3


class ProgramMismatchError(PatdivError):
    exit_code = 4


class QueueExhaustedError(PatdivError):
    exit_code = 5


class QueueExtensionRequired(QueueExhaustedError):
    """Raised by an Extend-policy queue when a complementary pattern set is needed."""
