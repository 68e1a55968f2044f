"""
Verification reports.

Validators never raise on a failing axiom: they return a ``Report`` listing one
``CheckResult`` per axiom, with the first failing witness in ``detail``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List

from models.objects import CheckModel, ReportModel
from telemetrics.logger import logger


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class Report:
    subject: str
    checks: List[CheckResult] = field(default_factory=list)

    def add(self, name: str, failure: str | None = None) -> CheckResult:
        """Record a check; ``failure`` is the witness of a failing check, None when it passed."""
        result = CheckResult(name, failure is None, failure or "")
        if not result.passed:
            logger.warning(f"{self.subject}: check '{name}' failed: {failure}", tag="verify")
        self.checks.append(result)
        return result

    def extend(self, other: "Report", prefix: str | None = None):
        for check in other.checks:
            name = f"{prefix}.{check.name}" if prefix else check.name
            self.checks.append(CheckResult(name, check.passed, check.detail))

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def get(self, name: str) -> CheckResult:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def __iter__(self) -> Iterator[CheckResult]:
        return iter(self.checks)

    def __len__(self) -> int:
        return len(self.checks)

    def to_dict(self) -> Dict[str, Any]:
        checks = [CheckModel(**check.to_dict()) for check in self.checks]
        return ReportModel(subject=self.subject, passed=self.passed, checks=checks).model_dump()
