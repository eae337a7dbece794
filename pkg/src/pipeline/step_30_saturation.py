"""Step 30: Saturation metrics.

ITS is the ratio of unique codes to total codes at the end of a run; lower
means more repetition. Cumulative curves are fitted by ordinary least squares
over the zero-based interview index, and stability across runs is the
coefficient of variation (sample SD) of the ITS values.
"""

import logging
from pathlib import Path
from typing import Optional

import numpy as np
import orjson

from src.pipeline.errors import InputError, MetricError
from src.schemas.models import LinearFit, PositionCount, SaturationReport, StabilitySummary

logger = logging.getLogger(__name__)

DISPLAY_DECIMALS = 2


def its_ratio(unique: int, total: int) -> float:
    """Unique over total, full precision."""
    if total < 1:
        raise MetricError(f"ITS needs at least one code, got total={total}")
    if unique < 1 or unique > total:
        raise MetricError(f"ITS needs 1 <= unique <= total, got {unique}/{total}")
    return unique / total


def linear_fit(points: list[tuple[float, float]]) -> LinearFit:
    """OLS line through (x, y) points."""
    if len(points) < 2:
        raise MetricError(f"A line needs at least 2 points, got {len(points)}")
    x = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    if np.all(x == x[0]):
        raise MetricError("Cannot fit a line: all x values are equal")

    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    return LinearFit(slope=float(slope), intercept=float(intercept), n_points=len(points))


def fit_counts(counts: list[PositionCount]) -> tuple[LinearFit, LinearFit]:
    """Fits of the cumulative total and unique curves (x = 0, 1, ...)."""
    total = linear_fit([(i, c.cumulative_total) for i, c in enumerate(counts)])
    unique = linear_fit([(i, c.cumulative_unique) for i, c in enumerate(counts)])
    return total, unique


def mse_between_fits(a: LinearFit, b: LinearFit, n: int) -> float:
    """Mean squared gap between two lines over x = 0..n-1."""
    if n < 1:
        raise MetricError(f"MSE needs n >= 1, got {n}")
    x = np.arange(n, dtype=float)
    gap = (a.slope - b.slope) * x + (a.intercept - b.intercept)
    return float(np.mean(gap**2))


def cov_percent(values: list[float]) -> float:
    """100 * sample SD / mean."""
    if len(values) < 2:
        raise MetricError(f"CoV needs at least 2 values, got {len(values)}")
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if mean <= 0:
        raise MetricError(f"CoV is undefined for mean {mean}")
    return 100.0 * float(arr.std(ddof=1)) / mean


def its_slope_ratio(fit_unique: LinearFit, fit_total: LinearFit) -> float:
    """Growth of unique codes relative to growth of all codes."""
    if fit_total.slope <= 0:
        raise MetricError(f"Slope ratio needs a rising total curve, got slope {fit_total.slope}")
    return fit_unique.slope / fit_total.slope


def running_its(counts: list[PositionCount]) -> list[float]:
    """ITS after each position."""
    return [its_ratio(c.cumulative_unique, c.cumulative_total) for c in counts]


def build_report(
    run_id: str,
    sequence_name: str,
    counts: list[PositionCount],
    judge: str = "",
    iteration: int = 1,
) -> SaturationReport:
    """Final ITS plus curve fits of one reduced run."""
    if not counts:
        raise MetricError(f"Run {run_id} has no counts")
    last = counts[-1]
    its = its_ratio(last.cumulative_unique, last.cumulative_total)

    fit_total: Optional[LinearFit] = None
    fit_unique: Optional[LinearFit] = None
    slope_ratio: Optional[float] = None
    if len(counts) >= 2:
        fit_total, fit_unique = fit_counts(counts)
        if fit_total.slope > 0:
            slope_ratio = its_slope_ratio(fit_unique, fit_total)

    return SaturationReport(
        run_id=run_id,
        sequence_name=sequence_name,
        judge=judge,
        iteration=iteration,
        counts=counts,
        total_codes=last.cumulative_total,
        unique_codes=last.cumulative_unique,
        its=its,
        its_display=f"{its:.{DISPLAY_DECIMALS}f}",
        slope_ratio=slope_ratio,
        fit_total=fit_total,
        fit_unique=fit_unique,
    )


def summarize_runs(reports: list[SaturationReport]) -> StabilitySummary:
    """Mean, SD, CoV and range of ITS across runs."""
    if len(reports) < 2:
        raise MetricError(f"Stability needs at least 2 runs, got {len(reports)}")
    values = [r.its for r in reports]
    arr = np.asarray(values, dtype=float)
    displayed = [round(v, DISPLAY_DECIMALS) for v in values]
    return StabilitySummary(
        its_values=values,
        mean=float(arr.mean()),
        sd=float(arr.std(ddof=1)),
        cov_percent=cov_percent(values),
        range=round(max(displayed) - min(displayed), DISPLAY_DECIMALS),
    )


def write_report(report: SaturationReport, path: Path) -> None:
    """Write report.json."""
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = orjson.dumps(report.model_dump(mode="json"), option=orjson.OPT_INDENT_2)
    path.write_bytes(payload + b"\n")
    logger.info(f"ITS {report.its_display} ({report.unique_codes}/{report.total_codes}) -> {path}")


def read_report(path: Path) -> SaturationReport:
    """Read report.json."""
    if not path.exists():
        raise InputError(f"Report not found: {path}")
    return SaturationReport.model_validate_json(path.read_bytes())
