"""Exception types shared across the toolkit."""

from __future__ import annotations


class NerqaError(Exception):
    """Base class for every error raised by this package."""


# parsing ------------------------------------------------------------------


class ParseError(NerqaError):
    """Input text violates the expected file format.

    Carries the 1-based line number of the offending line when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MalformedLine(ParseError):
    """A non-blank line has no tag field."""


class InconsistentTag(ParseError):
    """A tag is invalid for the configured scheme, or violates it in strict mode."""


class EmptyInstance(ParseError):
    """An instance would carry labels but no tokens."""


class JsonError(ParseError):
    """A JSONL line is not valid JSON or misses required fields."""


class SpanOutOfRange(ParseError):
    """A character span points outside its sentence text."""


class OverlappingSpans(ParseError):
    """Two character spans claim the same token."""


# metrics --------------------------------------------------------------------


class EmptyCorpus(NerqaError):
    """The requested statistic is undefined for a corpus with no instances."""


class MissingSplit(NerqaError):
    """A split required by the requested operation is not present in the bundle."""


class NoEntities(NerqaError):
    """The requested statistic is undefined when no entity mentions exist."""


class InsufficientScores(NerqaError):
    """Fewer than two model scores were supplied."""


# annotation -----------------------------------------------------------------


class KeyMismatch(NerqaError):
    """Judgment sets do not cover the same instance ids."""


class EmptyJudgments(NerqaError):
    """No judgments were supplied."""


# adjustment -----------------------------------------------------------------


class UnreachableTarget(NerqaError):
    """No subset size satisfies every target within tolerance.

    ``positives``/``negatives`` describe the pool, ``max_feasible`` the largest
    size that would have worked (0 when none does).
    """

    def __init__(
        self,
        message: str,
        *,
        positives: int | None = None,
        negatives: int | None = None,
        max_feasible: int | None = None,
    ):
        self.positives = positives
        self.negatives = negatives
        self.max_feasible = max_feasible
        super().__init__(message)
