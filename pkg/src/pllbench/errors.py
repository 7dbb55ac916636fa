"""Exception hierarchy shared across the package.

Every error raised by pllbench code derives from :class:`PLLBenchError`,
so callers (and the CLI) can distinguish our failures from genuine bugs.
``BackendError`` is the only one that maps to a backend-side failure; the
rest are input or configuration problems.
"""


class PLLBenchError(Exception):
    """Base class for all pllbench errors."""


class EmptyInput(PLLBenchError):
    """Input text, corpus, or record set is empty where content is required."""


class MalformedTokenization(PLLBenchError):
    """Token offsets or special-token placement are inconsistent with the text."""


class VocabularyMismatch(PLLBenchError):
    """A token id is unknown to, or out of range for, the active vocabulary."""


class AlignmentError(PLLBenchError):
    """A word/token alignment does not satisfy its structural invariants."""


class InvalidStrategy(PLLBenchError):
    """The strategy name is unknown, or the strategy is invalid for the operation."""


class UnsupportedStrategy(PLLBenchError):
    """The selected backend does not expose the capability the strategy needs."""


class SequenceTooLong(PLLBenchError):
    """The materialized input exceeds the backend's maximum sequence length."""


class BackendError(PLLBenchError):
    """A backend call failed; carries the originating request context."""

    def __init__(self, message: str, *, context: object = None):
        super().__init__(message)
        self.context = context


class ShapeError(PLLBenchError):
    """Paired inputs disagree in length or key structure."""


class DegenerateInput(PLLBenchError):
    """A statistic is undefined for the input (e.g. zero variance)."""
