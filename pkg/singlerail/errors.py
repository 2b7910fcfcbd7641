from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .models import FeasibilityVerdict


class BaseError(Exception):
    pass


class InvalidStateError(BaseError):
    pass


class InvalidParameterError(BaseError):
    pass


class DomainError(BaseError):
    pass


class ZeroProbabilityError(BaseError):
    pass


class NoSolutionError(BaseError):
    pass


class TruncationOverflowError(BaseError):
    pass


class PovmValidationError(InvalidStateError):
    pass


class InfeasibleError(BaseError):
    def __init__(self, verdict: FeasibilityVerdict) -> None:
        super().__init__(verdict.reason)
        self.verdict = verdict
