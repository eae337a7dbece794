"""Structural audit of a completed reduction."""

from checkers.base import BaseChecker
from src.schemas.models import Finding, ReductionResult, Severity


class ConservationChecker(BaseChecker[ReductionResult]):
    """Every TCC entry lands exactly once in the UCC or the duplicate log."""

    @property
    def name(self) -> str:
        """Checker name."""
        return "ConservationChecker"

    def check(self, result: ReductionResult) -> list[Finding]:
        """Check conservation and count coherence."""
        findings: list[Finding] = []
        total = len(result.tcc.entries)
        kept = len(result.ucc.entries)
        dropped = len(result.ucc.duplicates)

        if kept + dropped != total:
            findings.append(
                Finding(
                    checker=self.name,
                    reason=f"UCC {kept} + duplicates {dropped} != TCC {total}",
                    severity=Severity.ERROR,
                )
            )

        previous_total = previous_unique = 0
        for count in result.counts:
            if count.cumulative_unique > count.cumulative_total:
                findings.append(
                    Finding(
                        checker=self.name,
                        position=count.position,
                        reason=f"unique {count.cumulative_unique} > total {count.cumulative_total}",
                        severity=Severity.ERROR,
                    )
                )
            if count.cumulative_total < previous_total or count.cumulative_unique < previous_unique:
                findings.append(
                    Finding(
                        checker=self.name,
                        position=count.position,
                        reason="cumulative counts decreased",
                        severity=Severity.ERROR,
                    )
                )
            previous_total, previous_unique = count.cumulative_total, count.cumulative_unique

        final = result.counts[-1].cumulative_unique if result.counts else kept
        if final != kept:
            findings.append(
                Finding(
                    checker=self.name,
                    reason=f"final unique count {final} != UCC size {kept}",
                    severity=Severity.ERROR,
                )
            )
        return findings
