"""Soft word-count targets for initial codes."""

from checkers.base import BaseChecker
from src.schemas.models import Finding, InterviewCodeSet, Severity

NAME_MAX_WORDS = 5
DESCRIPTION_TARGET_WORDS = 30
QUOTE_MAX_WORDS = 40


class CodeLengthChecker(BaseChecker[InterviewCodeSet]):
    """Flags codes that overshoot the requested lengths or lack a quote."""

    def __init__(
        self,
        name_max: int = NAME_MAX_WORDS,
        description_max: int = DESCRIPTION_TARGET_WORDS,
        quote_max: int = QUOTE_MAX_WORDS,
        slack: float = 1.5,
    ) -> None:
        self.name_max = name_max
        # Descriptions are a target, not a cap
        self.description_max = int(description_max * slack)
        self.quote_max = quote_max

    @property
    def name(self) -> str:
        """Checker name."""
        return "CodeLengthChecker"

    def check(self, code_set: InterviewCodeSet) -> list[Finding]:
        """Check every code of one interview."""
        findings: list[Finding] = []

        def warn(code_name: str, reason: str, suggestion: str | None = None) -> None:
            findings.append(
                Finding(
                    checker=self.name,
                    position=code_set.position,
                    code_name=code_name,
                    reason=reason,
                    severity=Severity.WARNING,
                    suggestion=suggestion,
                )
            )

        for code in code_set.codes:
            name_words = len(code.name.split())
            if name_words > self.name_max:
                warn(code.name, f"Code name has {name_words} words (target <= {self.name_max})")

            description_words = len(code.description.split())
            if description_words > self.description_max:
                target = DESCRIPTION_TARGET_WORDS
                warn(code.name, f"Description has {description_words} words (target ~{target})")

            if not code.quote.strip():
                warn(code.name, "Code has no participant quote", "Check the raw coding answer")
            else:
                quote_words = len(code.quote.split())
                if quote_words > self.quote_max:
                    warn(code.name, f"Quote has {quote_words} words (max {self.quote_max})")

        return findings
