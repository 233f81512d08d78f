"""Exception taxonomy.

Every failure mode surfaced by the public API is a subclass of PixgenError,
so callers can catch one base type at the batch boundary while tests can
assert on precise failure kinds. Parsers and providers never let a foreign
exception escape: anything unexpected is wrapped before it crosses a module
boundary.
"""

from __future__ import annotations


class PixgenError(Exception):
    """Base class for all errors raised by this package."""

    kind = "error"


# --- configuration / registry ------------------------------------------------

class ConfigError(PixgenError):
    kind = "config-invalid"


class RegistryError(PixgenError):
    kind = "registry-invalid"


class UnknownCategoryError(RegistryError):
    kind = "unknown-category"


# --- persona store -----------------------------------------------------------

class PersonaCorpusError(PixgenError):
    kind = "io-error"


class EmptyCorpusError(PersonaCorpusError):
    kind = "empty-corpus"


class EmptyStoreError(PixgenError):
    kind = "empty-store"


# --- prompt templates --------------------------------------------------------

class MissingBindingError(PixgenError):
    """A template placeholder had no binding.

    ``placeholder`` names the first absent one.
    """

    kind = "missing-binding"

    def __init__(self, placeholder: str):
        super().__init__(f"no binding for placeholder {placeholder}")
        self.placeholder = placeholder


# --- providers / gateway -----------------------------------------------------

class ProviderError(PixgenError):
    kind = "provider-error"


class ProviderUnavailableError(ProviderError):
    kind = "provider-unavailable"


class TransportError(ProviderError):
    """Transient transport failure. Retried with backoff; raised only once
    retries are exhausted (``attempts`` carries the total tried)."""

    kind = "transport-error"

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class RateLimitError(ProviderError):
    """Raised by providers on throttling; treated as transient."""

    kind = "rate-limit"


class RateLimitExhaustedError(ProviderError):
    kind = "rate-limit-exhausted"

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


# --- stage-output parsers ----------------------------------------------------

class ParseError(PixgenError):
    kind = "parse-failed"


class TopicCountMismatchError(ParseError):
    """Parsed topic count differs from the requested count.

    Carries what *was* parsed so the caller can decide to accept it.
    """

    kind = "count-mismatch"

    def __init__(self, parsed: list[str], expected: int):
        super().__init__(f"parsed {len(parsed)} topics, expected {expected}")
        self.parsed = parsed
        self.expected = expected


class EmptyOutputError(ParseError):
    kind = "empty-output"


class NoJsonObjectError(ParseError):
    kind = "no-object-found"


class MalformedPayloadError(ParseError):
    kind = "malformed-payload"


class NoCodeBlockError(ParseError):
    kind = "no-code-block"


class AmbiguousCodeBlocksError(ParseError):
    kind = "multiple-ambiguous-blocks"


class ZeroValidTripletsError(ParseError):
    kind = "zero-valid-triplets"

    def __init__(self, dropped: int):
        super().__init__(f"no valid triplets ({dropped} malformed records dropped)")
        self.dropped = dropped


# --- rendering ---------------------------------------------------------------

class RenderError(PixgenError):
    """Base render failure; ``stderr`` holds captured tool output."""

    kind = "render-failed"

    def __init__(self, message: str, stderr: str = ""):
        super().__init__(message)
        self.stderr = stderr


class ToolMissingError(RenderError):
    kind = "tool-missing"


class CompileError(RenderError):
    kind = "compile-error"


class RenderTimeoutError(RenderError):
    kind = "timeout"


class NoOutputImageError(RenderError):
    kind = "no-output-image"


class UndecodableImageError(RenderError):
    kind = "undecodable-image"


# --- pointing ----------------------------------------------------------------

class ZeroMarkersFoundError(PixgenError):
    kind = "zero-markers-found"


class CoordinateRangeError(PixgenError):
    kind = "out-of-range"


class MarkerCollisionError(PixgenError):
    """Every candidate marker color already occurs in the original image."""

    kind = "marker-collision"


class SizeMismatchError(PixgenError):
    """Edited render differs in size from the original, so pixel
    coordinates would not transfer."""

    kind = "size-mismatch"


# --- diversity ---------------------------------------------------------------

class DiversityError(PixgenError):
    kind = "diversity-error"


class DimensionMismatchError(DiversityError):
    kind = "dimension-mismatch"


class TooFewVectorsError(DiversityError):
    kind = "too-few-vectors"


class ZeroNormVectorError(DiversityError):
    kind = "zero-norm-vector"


class TooFewRecordsError(DiversityError):
    kind = "too-few-records"


class EmbedderUnavailableError(DiversityError):
    kind = "provider-unavailable"


# --- shard i/o ---------------------------------------------------------------

class ShardError(PixgenError):
    kind = "shard-error"


class OutputExistsError(ShardError):
    kind = "output-exists"


class OutputUnwritableError(ShardError):
    kind = "output-unwritable"


class DuplicateRecordIdError(ShardError):
    kind = "duplicate-record-id"


class EmptyShardError(ShardError):
    kind = "empty-shard"


# --- orchestration -----------------------------------------------------------

class StageExhaustedError(PixgenError):
    """All retry attempts for one stage failed; wraps the final error."""

    kind = "stage-exhausted"

    def __init__(self, stage: str, attempts: int, cause: PixgenError):
        super().__init__(f"stage {stage} failed after {attempts} attempts: {cause}")
        self.stage = stage
        self.attempts = attempts
        self.cause = cause


class AllJobsFailedError(PixgenError):
    kind = "all-jobs-failed"
