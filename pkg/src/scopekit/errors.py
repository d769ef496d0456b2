"""Exception types shared across pipeline stages."""


class ScopekitError(Exception):
    """Base class for every error this package raises on purpose."""


class RootNotFoundError(ScopekitError):
    """Ingest root does not exist or is not a directory."""


class InvalidConfigError(ScopekitError):
    """A config object or config file violates its invariants.

    Carries ``problems``: one message per violated field, so callers can
    report every problem at once instead of the first one found.
    """

    def __init__(self, problems):
        self.problems = [str(p) for p in problems]
        super().__init__("; ".join(self.problems))


class DimensionMismatchError(ScopekitError):
    """A vector's dimension does not match the index or service dimension."""


class EmbeddingServiceUnavailableError(ScopekitError):
    """The remote embedding endpoint could not be reached or answered non-200."""


class EndpointUnavailableError(ScopekitError):
    """The generation endpoint could not be reached or answered non-200."""


class GenerationTimeoutError(ScopekitError):
    """The generation endpoint did not answer within the request timeout."""


class MalformedResponseError(ScopekitError):
    """A service answered 200 but the body does not match the wire contract."""


class StageError(ScopekitError):
    """A pipeline stage failed; carries the stage name for the run manifest."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
