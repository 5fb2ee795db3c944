"""Shared validation report primitives.

Validators across the engine never raise for data-quality problems; they
return a :class:`ValidationReport` so callers (CLI, API, console) can show
every finding at once.  Hard precondition violations still raise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"
    ADVISORY = "advisory"


@dataclass(frozen=True)
class Finding:
    severity: Severity
    code: str
    message: str
    feature: Optional[str] = None

    def to_json_dict(self) -> dict:
        d = {"severity": self.severity.value, "code": self.code, "message": self.message}
        if self.feature is not None:
            d["feature"] = self.feature
        return d


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    def add(self, severity: Severity, code: str, message: str, feature: str | None = None) -> None:
        self.findings.append(Finding(severity, code, message, feature))

    def error(self, code: str, message: str, feature: str | None = None) -> None:
        self.add(Severity.ERROR, code, message, feature)

    def warning(self, code: str, message: str, feature: str | None = None) -> None:
        self.add(Severity.WARNING, code, message, feature)

    def advisory(self, code: str, message: str, feature: str | None = None) -> None:
        self.add(Severity.ADVISORY, code, message, feature)

    def extend(self, other: "ValidationReport") -> None:
        self.findings.extend(other.findings)

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity is Severity.ERROR]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity is Severity.WARNING]

    @property
    def advisories(self) -> list[Finding]:
        return [f for f in self.findings if f.severity is Severity.ADVISORY]

    @property
    def ok(self) -> bool:
        """True when no error-severity findings are present."""
        return not self.errors

    def __len__(self) -> int:
        return len(self.findings)

    def __iter__(self) -> Iterable[Finding]:
        return iter(self.findings)

    def messages(self) -> list[str]:
        return [f"{f.severity.value}: {f.message}" for f in self.findings]

    def to_json_dict(self) -> dict:
        return {"ok": self.ok, "findings": [f.to_json_dict() for f in self.findings]}
