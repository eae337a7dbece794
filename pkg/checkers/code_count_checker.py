"""Checks the number of codes returned against the number requested."""

from checkers.base import BaseChecker
from src.schemas.models import Finding, InterviewCodeSet, Severity


class CodeCountChecker(BaseChecker[InterviewCodeSet]):
    """Over-limit answers are kept; this only reports them."""

    def __init__(self, max_codes: int) -> None:
        self.max_codes = max_codes

    @property
    def name(self) -> str:
        """Checker name."""
        return "CodeCountChecker"

    def check(self, code_set: InterviewCodeSet) -> list[Finding]:
        """Compare the set size to max_codes."""
        count = len(code_set.codes)
        if count > self.max_codes:
            return [
                Finding(
                    checker=self.name,
                    position=code_set.position,
                    reason=f"{count} codes returned, {self.max_codes} requested; all kept",
                    severity=Severity.WARNING,
                )
            ]
        if count < self.max_codes:
            return [
                Finding(
                    checker=self.name,
                    position=code_set.position,
                    reason=f"{count} codes returned, {self.max_codes} requested",
                    severity=Severity.INFO,
                )
            ]
        return []
