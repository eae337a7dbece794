"""Self-consistency audit: a report's ITS must follow from its own CSVs."""

import math
from pathlib import Path

from checkers.base import BaseChecker
from src.codebook.csv_io import COUNTS_FILE, DUPLICATES_FILE, UCC_FILE, count_csv_rows, read_counts
from src.pipeline.errors import InputError
from src.schemas.models import Finding, SaturationReport, Severity

REPORT_FILE = "report.json"


class ItsConsistencyChecker(BaseChecker[Path]):
    """Recomputes unique/total from the reduction directory's CSVs."""

    @property
    def name(self) -> str:
        """Checker name."""
        return "ItsConsistencyChecker"

    def check(self, reduce_dir: Path) -> list[Finding]:
        """Audit one reduction directory."""
        findings: list[Finding] = []

        def error(reason: str) -> None:
            reason = f"{reduce_dir}: {reason}"
            findings.append(Finding(checker=self.name, reason=reason, severity=Severity.ERROR))

        report_path = reduce_dir / REPORT_FILE
        if not report_path.exists():
            error("report.json missing")
            return findings
        report = SaturationReport.model_validate_json(report_path.read_bytes())

        try:
            unique = count_csv_rows(reduce_dir / UCC_FILE)
            duplicates = count_csv_rows(reduce_dir / DUPLICATES_FILE)
            counts = read_counts(reduce_dir / COUNTS_FILE)
        except InputError as e:
            error(str(e))
            return findings

        total = unique + duplicates
        if total == 0:
            error("no codes in CSVs")
            return findings
        if unique != report.unique_codes or total != report.total_codes:
            error(
                f"report says {report.unique_codes}/{report.total_codes}, "
                f"CSVs hold {unique}/{total}"
            )
        if not math.isclose(report.its, unique / total, rel_tol=0.0, abs_tol=1e-12):
            error(f"report ITS {report.its} != recomputed {unique / total}")
        last = counts[-1] if counts else None
        if last and (last.cumulative_unique, last.cumulative_total) != (unique, total):
            error("last counts row disagrees with UCC/duplicates CSVs")
        return findings
