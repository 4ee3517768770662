"""Shared result types for the structural feasibility checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

Cell = tuple[int, int, int]


class CheckKind(Enum):
    COMPONENT_COUNT = "component_count"
    OVERHANG = "overhang"
    VERTICAL_STACK = "vertical_stack"
    CONNECTIVITY = "connectivity"


class CheckStatus(Enum):
    PASSED = "passed"
    FAILED = "failed"


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one feasibility check.

    ``details`` lists the offending cells (or, for the count check, the
    offending component count). It is empty exactly when the check passed.
    """

    check: CheckKind
    status: CheckStatus
    details: tuple = field(default=())

    def __post_init__(self) -> None:
        failed = self.status is CheckStatus.FAILED
        if failed != bool(self.details):
            raise ValueError("details must be non-empty exactly when the check failed")

    @property
    def passed(self) -> bool:
        return self.status is CheckStatus.PASSED

    @property
    def failed(self) -> bool:
        return self.status is CheckStatus.FAILED


def passed(check: CheckKind) -> CheckResult:
    return CheckResult(check, CheckStatus.PASSED)


def failed(check: CheckKind, details: tuple) -> CheckResult:
    return CheckResult(check, CheckStatus.FAILED, tuple(details))
