"""Exception types shared by every gsp4-hecke module."""

from __future__ import annotations


class Gsp4Error(ValueError):
    """Root of the package's error hierarchy."""


class DomainError(Gsp4Error):
    """An argument falls outside an operation's precondition."""


class ZetaDomainError(DomainError):
    """A zeta-type evaluation was requested where it has a pole or diverges."""

    def __init__(self, message: str, factor: str | None = None):
        super().__init__(message)
        self.factor = factor


class ResourceBudgetError(Gsp4Error):
    """A computation would exceed the configured memory budget."""

    def __init__(self, message: str, needed_bytes: int = 0, budget_bytes: int = 0):
        super().__init__(message)
        self.needed_bytes = needed_bytes
        self.budget_bytes = budget_bytes


def error_record(exc: BaseException, command: str | None = None) -> dict:
    """Machine-readable record of a failure, as written by the CLI."""
    rec = {"error": type(exc).__name__, "message": str(exc), "command": command}
    factor = getattr(exc, "factor", None)
    if factor:
        rec["factor"] = factor
    if isinstance(exc, ResourceBudgetError):
        rec["needed_bytes"] = exc.needed_bytes
        rec["budget_bytes"] = exc.budget_bytes
    return rec
