"""Exception types shared across the package.

Every error raised by trafficdist derives from TrafficdistError, so callers
(and the CLI) can distinguish tool errors from genuine bugs.
"""


class TrafficdistError(Exception):
    """Base class for all trafficdist errors."""


class EmptyTextError(TrafficdistError):
    """Raised when a text is empty or whitespace-only."""


class FormatError(TrafficdistError):
    """Malformed input file (JSONL parse failure, bad schema, bad count)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SpanError(TrafficdistError):
    """Token span out of bounds, inverted, or overlapping another span."""


class DimensionError(TrafficdistError):
    """Embedding vectors with inconsistent dimensions."""


class MissingEmbeddingError(TrafficdistError):
    """A sentence id has no vector in the embedding table."""

    def __init__(self, sentence_id: str):
        self.sentence_id = sentence_id
        super().__init__(f"no embedding for sentence id {sentence_id!r}")


class ShapeError(TrafficdistError):
    """Weight matrix is not square (bags must be equalized first)."""


class DegenerateVectorError(TrafficdistError):
    """A bag vector is all-zero, so cosine similarity is undefined."""


class NotApplicableError(TrafficdistError):
    """A manipulation cannot be applied to this bag (e.g. single distinct text)."""


class MissingDistractorsError(TrafficdistError):
    """Noisy-text injection requested but the distractor pool is empty."""


class AnnotationRequiredError(TrafficdistError):
    """A manipulation needs span/intent/attribute annotations that are missing."""


class UsageError(TrafficdistError):
    """Invalid configuration or command-line usage."""
