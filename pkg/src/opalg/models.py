"""Data models for verification results."""

from dataclasses import dataclass, field
from typing import Any


@dataclass
class Certificate:
    """Outcome of an identity-checking pass."""

    name: str
    passed: bool = True
    checks: dict[str, int] = field(default_factory=dict)  # identity class -> instances checked
    skipped: int = 0  # instances outside the truncation bound
    bounds: dict[str, Any] = field(default_factory=dict)
    notices: list[str] = field(default_factory=list)
    failure: dict[str, Any] | None = None

    def count(self, identity: str, k: int = 1) -> None:
        self.checks[identity] = self.checks.get(identity, 0) + k

    def fail(self, identity: str, **details: Any) -> None:
        self.passed = False
        self.failure = {"identity": identity, **details}

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "checks": dict(sorted(self.checks.items())),
            "skipped": self.skipped,
            "bounds": self.bounds,
            "notices": list(self.notices),
            "failure": self.failure,
        }


@dataclass
class TaskResult:
    """One task of a workspace run."""

    index: int
    command: str
    target: str
    status: str = "ok"  # ok | failed | error
    trusted: dict[str, Any] = field(default_factory=dict)
    tables: dict[str, Any] = field(default_factory=dict)
    message: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict[str, Any]:
        out = {
            "index": self.index,
            "command": self.command,
            "target": self.target,
            "status": self.status,
            "trusted": self.trusted,
            "tables": self.tables,
        }
        if self.message:
            out["message"] = self.message
        return out
