"""Exception types shared across the package.

Every error callers are expected to branch on gets its own class; generic
misuse (wrong argument types and the like) raises the usual builtins.
"""


class GtpMeshError(Exception):
    """Base class for all package errors."""


class ParseError(GtpMeshError):
    """A data file (lexicon, db, model, config, cases) failed to parse."""

    def __init__(self, line_no, reason, path=None):
        self.line_no = line_no
        self.reason = reason
        self.path = path
        where = f"{path}:{line_no}" if path else f"line {line_no}"
        super().__init__(f"{where}: {reason}")


class UnknownPhonemeError(GtpMeshError):
    """A phoneme label is not in the inventory."""

    def __init__(self, label, position):
        self.label = label
        self.position = position
        super().__init__(f"unknown phoneme {label!r} at position {position}")


class AdjacentBoundaryError(GtpMeshError):
    """Two word-boundary markers occurred back to back."""


class NoRuleError(GtpMeshError):
    """A grapheme has no letter-to-sound rule and the word is not in the lexicon."""

    def __init__(self, grapheme, token_index=None):
        self.grapheme = grapheme
        self.token_index = token_index
        at = f" (token {token_index})" if token_index is not None else ""
        super().__init__(f"no letter-to-sound rule for {grapheme!r}{at}")


class EmptyPronunciationError(GtpMeshError):
    """A token phonemized to zero phonemes; word spans must be non-empty."""

    def __init__(self, surface, token_index):
        self.surface = surface
        self.token_index = token_index
        super().__init__(f"token {surface!r} at index {token_index} produced no phonemes")


class UnknownVariantError(GtpMeshError):
    """An annotation references a pronunciation variant the lexicon lacks."""

    def __init__(self, word, variant_id):
        self.word = word
        self.variant_id = variant_id
        super().__init__(f"word {word!r} has no variant {variant_id}")


class WordNotInDbError(GtpMeshError):
    """Scoring was asked about a word the homograph db has never seen."""


class MissingAlignmentError(GtpMeshError):
    """An operation needs per-word spans but the sequence has no alignment."""


class TagLengthMismatchError(GtpMeshError):
    """The ezafe tag list does not match the sequence's word count."""

    def __init__(self, n_tags, n_words):
        self.n_tags = n_tags
        self.n_words = n_words
        super().__init__(f"{n_tags} tags for {n_words} words")


class EmptyCorpusError(GtpMeshError):
    """Training or evaluation was given an empty corpus."""


# Frame codec errors.

class OversizeError(GtpMeshError):
    """Frame payload exceeds the 16 MiB limit."""


class TruncatedError(GtpMeshError):
    """Fewer bytes were available than the frame header promised."""


class MalformedPayloadError(GtpMeshError):
    """Frame payload is not a valid request/response object."""


# Service transport errors.

class SpawnFailedError(GtpMeshError):
    """The service child process exited before becoming ready."""


class ReadyTimeoutError(GtpMeshError):
    """The service did not send its ready sentinel within the deadline."""


class RequestTimeoutError(GtpMeshError):
    """No response arrived for a request within the deadline."""


class PipeBrokenError(GtpMeshError):
    """The service connection is gone; the handle is dead."""


class ServiceError(GtpMeshError):
    """The service answered a request with an error frame."""


class ServiceUnavailableError(GtpMeshError):
    """Pipeline is in service mode but its service handle is not ready."""


# Metric errors.

class EmptyReferenceError(GtpMeshError):
    """PER needs a non-empty reference sequence."""


class EmptyCasesError(GtpMeshError):
    """A metric was given zero cases."""


class ZeroPerError(GtpMeshError):
    """The composite quality metric divides by PER, which must be positive."""


class ZeroDurationError(GtpMeshError):
    """RTF divides by audio duration, which must be positive."""
