"""Error taxonomy shared across the package.

Validation failures carry a stable kebab-case ``code`` plus optional location
context so the CLI can emit machine-readable error lists (exit code 2).
Anything else that escapes is an internal error (exit code 1).
"""

from __future__ import annotations


class ValidationError(Exception):
    """Input violated a schema rule or a documented invariant."""

    def __init__(self, code: str, message: str, where: dict | None = None):
        self.code = code
        self.where = dict(where) if where else {}
        super().__init__(message)

    @property
    def message(self) -> str:
        return self.args[0]

    def to_dict(self) -> dict:
        entry = {"code": self.code, "message": self.message}
        if self.where:
            entry["where"] = self.where
        return entry

    def __repr__(self) -> str:  # pragma: no cover
        return f"ValidationError({self.code!r}, {self.message!r}, where={self.where!r})"


class ValidationErrorGroup(Exception):
    """A batch of validation errors collected from one input (not fail-fast)."""

    def __init__(self, errors: list[ValidationError]):
        self.errors = list(errors)
        summary = "; ".join(e.message for e in self.errors[:5])
        if len(self.errors) > 5:
            summary += f"; ... ({len(self.errors)} total)"
        super().__init__(summary)

    def to_list(self) -> list[dict]:
        return [e.to_dict() for e in self.errors]
