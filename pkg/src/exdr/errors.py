"""Exception taxonomy for the engine.

Every error raised by this package derives from :class:`ExdrError` so that
callers can catch engine faults without swallowing programming errors.
"""


class ExdrError(Exception):
    """Base class for all engine errors."""


# -- corpus / response parsing ------------------------------------------------

class MalformedRecord(ExdrError):
    """A JSONL record could not be parsed or failed schema validation."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateId(ExdrError):
    """Two records in one file share an id."""


class UnknownFineLabel(ExdrError):
    """A fine-grained label string is not one of the six known variants."""


class UnparseableResponse(ExdrError):
    """Generated text does not follow the 'The pair is {real|fake} because' form."""


# -- backends -----------------------------------------------------------------

class BackendUnavailable(ExdrError):
    """The backend cannot serve the request (network fault, missing trace)."""


class FixtureMiss(BackendUnavailable):
    """The fixture store has no trace for this request."""


class MissingLogprobs(ExdrError):
    """The generation backend returned no token logprobs."""


class DimMismatch(ExdrError):
    """An embedding's dimension differs from the session's declared dim."""


# -- confidence ---------------------------------------------------------------

class NonFiniteInput(ExdrError):
    """A logprob argument is NaN or infinite."""


# -- index / retrieval --------------------------------------------------------

class ZeroVector(ExdrError):
    """Feature fusion produced a (near-)zero vector that cannot be normalized."""


class EmptyPool(ExdrError):
    """No index record passes the query filter."""


class EmptyIndex(ExdrError):
    """An operation requires a non-empty index."""


class NoPositivePool(ExdrError):
    """No corpus record matches the inferred fine-grained label (or its binary relaxation)."""


class NoNegativePool(ExdrError):
    """No corpus record has a binary label opposite to the prediction."""


class MissingCorpusEntry(ExdrError):
    """A retrieved corpus id does not resolve to a corpus entry."""


# -- threshold search ---------------------------------------------------------

class EmptyCache(ExdrError):
    """The validation cache holds no samples."""


# -- metrics ------------------------------------------------------------------

class NoRetrievals(ExdrError):
    """A retrieval metric is undefined because no sample triggered retrieval."""


class LengthMismatch(ExdrError):
    """Prediction and gold label lists differ in length."""


class EmptyInput(ExdrError):
    """A metric was asked for on an empty list."""


# -- pipeline -----------------------------------------------------------------

class ConfigError(ExdrError):
    """A run configuration is inconsistent or references missing inputs."""
