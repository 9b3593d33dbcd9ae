"""Error registry shared by every subsystem.

Each exception carries a stable ``code`` (its class name) so the review
service can surface module errors verbatim as ``{code, message, detail}``
payloads without a shadow taxonomy.
"""

from __future__ import annotations

from typing import Any


class ScoreloopError(Exception):
    """Base class; ``code`` mirrors the class name."""

    def __init__(self, message: str = "", **detail: Any):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__
        self.detail = detail

    @property
    def code(self) -> str:
        return self.__class__.__name__

    def to_payload(self) -> dict[str, Any]:
        return {"code": self.code, "message": self.message, "detail": self.detail}


# rubric model
class DuplicateCriterionId(ScoreloopError): ...
class EmptyScheme(ScoreloopError): ...
class MissingLevelDescription(ScoreloopError): ...
class BadRange(ScoreloopError): ...
class SchemeMismatch(ScoreloopError): ...
class InvalidScoreVector(ScoreloopError): ...
class RubricValidationError(ScoreloopError):
    """Wraps the full violation list when a rubric document fails validation."""

    def __init__(self, violations: list[ScoreloopError]):
        super().__init__(
            "; ".join(v.message for v in violations),
            violations=[v.to_payload() for v in violations],
        )
        self.violations = violations


# corpus
class ParseError(ScoreloopError): ...
class DuplicateId(ScoreloopError): ...
class UnknownAssessment(ScoreloopError): ...
class WithheldIdUnknown(ScoreloopError): ...
class FractionOutOfRange(ScoreloopError): ...
class ExemplarConflict(ScoreloopError): ...


# prompt assembly
class TokenBudgetExceeded(ScoreloopError): ...
class UnknownExemplar(ScoreloopError): ...
class MissingLinkedContext(ScoreloopError): ...
class NonMonotonicLineNumbers(ScoreloopError): ...
class CitationNotFound(ScoreloopError): ...
class InvalidPromptConfig(ScoreloopError): ...


# gateway
class Transport(ScoreloopError): ...
class RateLimited(ScoreloopError): ...
class AuthMissing(ScoreloopError): ...
class ExhaustedRetries(ScoreloopError): ...
class MalformedDocument(ScoreloopError): ...
class MissingCriterion(ScoreloopError): ...
class ScoreOutOfRange(ScoreloopError): ...
class Truncated(ScoreloopError): ...
class ExtraCriterion(ScoreloopError): ...


# scoring runner
class PromptError(ScoreloopError): ...
class RunNotFound(ScoreloopError): ...


# metrics
class EmptySeries(ScoreloopError): ...
class SingleLevelRange(ScoreloopError): ...
class NoLabeledPairs(ScoreloopError): ...


# human-in-the-loop
class InsufficientData(ScoreloopError): ...
class IncompleteScoring(ScoreloopError): ...
class NoSuchDisagreement(ScoreloopError): ...
class IterationQuotaExceeded(ScoreloopError): ...


class NotValidationRun(UserWarning):
    """Warning raised when candidate ranking runs on a non-validation split."""


# review service
class PortInUse(ScoreloopError): ...
class DataDirMissing(ScoreloopError): ...
class NotFound(ScoreloopError): ...
