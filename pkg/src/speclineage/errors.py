"""Exception taxonomy shared across the pipeline.

CLI exit-code mapping: usage errors exit 1, validation-family errors exit 2,
provider errors exit 3, I/O errors exit 4.
"""


class SpecLineageError(Exception):
    """Base class for all toolkit errors."""


class InputFormatError(SpecLineageError):
    """An input file failed to parse; the message names the offending line."""


class CorpusValidationError(SpecLineageError):
    """Corpus content violates an invariant (dangling reference, empty text)."""


class NormalizationError(SpecLineageError):
    """Text is empty after canonicalization."""


class UnknownPairError(SpecLineageError):
    """A verdict referenced a pair key absent from the active candidate set."""


class UnknownItemError(SpecLineageError):
    """Lookup of an item id that does not exist in the corpus."""


class InsufficientDataError(SpecLineageError):
    """Agreement requested for annotators with no commonly judged pairs."""


class ProviderError(SpecLineageError):
    """Embedding provider unreachable or returned a malformed payload."""

    def __init__(self, message: str, endpoint: str, payload_excerpt: str = "",
                 completed: int = 0):
        self.endpoint = endpoint
        self.payload_excerpt = payload_excerpt
        self.completed = completed
        detail = f"{message} [endpoint={endpoint}]"
        if payload_excerpt:
            detail += f" payload: {payload_excerpt!r}"
        detail += f" ({completed} texts embedded before failure)"
        super().__init__(detail)


class UndefinedDistanceError(SpecLineageError):
    """Set-overlap distance undefined for an entity with an empty feature set."""


class NumericError(SpecLineageError):
    """Non-finite value where a finite distance was required."""


class OrderingError(SpecLineageError):
    """Chronological layout requested for undated items with no explicit order."""


class StageDependencyError(SpecLineageError):
    """A pipeline stage ran before the stage that produces its input."""

    def __init__(self, missing: str, hint: str = ""):
        self.missing = missing
        msg = f"missing artifact: {missing}"
        if hint:
            msg += f" (run `{hint}` first)"
        super().__init__(msg)


class WorkspaceLockedError(SpecLineageError):
    """Another process holds the workspace lock."""
