"""Step 50: Cross-run report.

Collects every reduced run under an output directory and writes:
    its_table.csv    one row per (sequence, iteration) cell, unique/ITS per judge, CoV row
    summary.json     stability summaries per judge (all runs, per sequence, per iteration)
    curves.csv       cumulative counts and running ITS per position
    curves.svg       overlaid cumulative total/unique curves
    regression.svg   fitted unique-code lines annotated with their coefficients
    fit_mse.csv      inter-fit MSE for every pair of runs sharing a judge
    audit.json       ITS self-consistency findings per run
"""

import itertools
import logging
from collections import defaultdict
from pathlib import Path
from typing import Any

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import orjson  # noqa: E402
import pandas as pd  # noqa: E402

from checkers import REPORT_FILE, ItsConsistencyChecker  # noqa: E402
from src.pipeline.errors import InputError  # noqa: E402
from src.pipeline.step_30_saturation import (  # noqa: E402
    DISPLAY_DECIMALS,
    mse_between_fits,
    read_report,
    running_its,
    summarize_runs,
)
from src.schemas.models import Finding, SaturationReport, Severity  # noqa: E402

logger = logging.getLogger(__name__)

REPORT_DIR = "report"
COV_ROW = "CoV %"


def find_reports(out_dir: Path) -> list[tuple[Path, SaturationReport]]:
    """Every <sequence>/iter_NN/reduce_<judge>/report.json, in path order."""
    paths = sorted(out_dir.glob(f"*/iter_*/reduce_*/{REPORT_FILE}"))
    return [(p.parent, read_report(p)) for p in paths]


def its_table(reports: list[SaturationReport]) -> pd.DataFrame:
    """Total codes plus unique codes and ITS per judge, one row per cell."""
    judges = sorted({r.judge for r in reports})
    cells: dict[tuple[str, int], dict[str, Any]] = {}
    for r in reports:
        row = cells.setdefault(
            (r.sequence_name, r.iteration),
            {"sequence": r.sequence_name, "iteration": r.iteration, "total_codes": r.total_codes},
        )
        row[f"unique_{r.judge}"] = r.unique_codes
        row[f"its_{r.judge}"] = r.its_display

    columns = ["sequence", "iteration", "total_codes"]
    for judge in judges:
        columns += [f"unique_{judge}", f"its_{judge}"]
    rows = [cells[k] for k in sorted(cells)]

    by_judge = _group(reports, lambda r: r.judge)
    if any(len(runs) >= 2 for runs in by_judge.values()):
        cov_row: dict[str, Any] = {"sequence": COV_ROW}
        for judge, runs in by_judge.items():
            if len(runs) >= 2:
                cov_row[f"its_{judge}"] = f"{summarize_runs(runs).cov_percent:.2f}"
        rows.append(cov_row)
    return pd.DataFrame(rows, columns=columns, dtype=object)


def _group(reports: list[SaturationReport], key: Any) -> dict[Any, list[SaturationReport]]:
    groups: dict[Any, list[SaturationReport]] = defaultdict(list)
    for r in reports:
        groups[key(r)].append(r)
    return dict(sorted(groups.items()))


def stability_groups(reports: list[SaturationReport]) -> dict[str, dict[str, Any]]:
    """Summaries for every group of >= 2 runs: per judge overall, per sequence, per iteration."""
    summaries: dict[str, dict[str, Any]] = {}
    for judge, runs in _group(reports, lambda r: r.judge).items():
        candidates = {f"{judge}/all": runs}
        for seq, group in _group(runs, lambda r: r.sequence_name).items():
            candidates[f"{judge}/sequence={seq}"] = group
        for iteration, group in _group(runs, lambda r: r.iteration).items():
            candidates[f"{judge}/iteration={iteration}"] = group
        for name, group in candidates.items():
            if len(group) >= 2:
                summaries[name] = {
                    "runs": [r.run_id for r in group],
                    **summarize_runs(group).model_dump(mode="json"),
                }
    return summaries


def curves_frame(reports: list[SaturationReport]) -> pd.DataFrame:
    """Long-format cumulative curves."""
    rows = []
    for r in reports:
        for c, its in zip(r.counts, running_its(r.counts)):
            rows.append(
                [
                    r.run_id,
                    r.sequence_name,
                    r.iteration,
                    r.judge,
                    c.position,
                    c.cumulative_total,
                    c.cumulative_unique,
                    its,
                ]
            )
    columns = [
        "run_id",
        "sequence",
        "iteration",
        "judge",
        "position",
        "cumulative_total",
        "cumulative_unique",
        "running_its",
    ]
    return pd.DataFrame(rows, columns=columns)


def fit_mse_frame(reports: list[SaturationReport]) -> pd.DataFrame:
    """Pairwise inter-fit MSE for runs sharing a judge."""
    rows = []
    for judge, runs in _group(reports, lambda r: r.judge).items():
        for a, b in itertools.combinations(runs, 2):
            if a.fit_unique is None or b.fit_unique is None:
                continue
            assert a.fit_total is not None and b.fit_total is not None
            n = min(len(a.counts), len(b.counts))
            rows.append(
                [
                    judge,
                    a.run_id,
                    b.run_id,
                    n,
                    mse_between_fits(a.fit_unique, b.fit_unique, n),
                    mse_between_fits(a.fit_total, b.fit_total, n),
                ]
            )
    return pd.DataFrame(
        rows, columns=["judge", "run_a", "run_b", "n", "mse_unique", "mse_total"]
    )


def _save_svg(fig: Any, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_curves(reports: list[SaturationReport], path: Path) -> None:
    """TCC (dashed) and UCC (solid) per run against the 1-based position."""
    plt.rcParams["svg.hashsalt"] = "its-curves"
    fig, ax = plt.subplots(figsize=(8, 5))
    for r in reports:
        x = [c.position for c in r.counts]
        (line,) = ax.plot(x, [c.cumulative_unique for c in r.counts], label=f"UCC {r.run_id}")
        ax.plot(
            x,
            [c.cumulative_total for c in r.counts],
            linestyle="--",
            color=line.get_color(),
            alpha=0.6,
            label=f"TCC {r.run_id}",
        )
    ax.set_xlabel("Interview position")
    ax.set_ylabel("Cumulative codes")
    ax.legend(fontsize=6, ncol=2)
    _save_svg(fig, path)


def plot_regression(reports: list[SaturationReport], path: Path) -> None:
    """Unique-code points with their OLS lines, labeled 'y = a * X + b'."""
    plt.rcParams["svg.hashsalt"] = "its-regression"
    fig, ax = plt.subplots(figsize=(8, 5))
    for r in reports:
        if r.fit_unique is None:
            continue
        x = np.arange(len(r.counts))
        fit = r.fit_unique
        points = ax.scatter(x, [c.cumulative_unique for c in r.counts], s=10)
        ax.plot(
            x,
            fit.slope * x + fit.intercept,
            color=points.get_facecolor()[0],
            label=(
                f"{r.run_id}: y = {fit.slope:.{DISPLAY_DECIMALS}f} * X + "
                f"{fit.intercept:.{DISPLAY_DECIMALS}f}"
            ),
        )
    ax.set_xlabel("Interview index X (0-based)")
    ax.set_ylabel("Cumulative unique codes")
    ax.legend(fontsize=6)
    _save_svg(fig, path)


def audit(reduce_dirs: list[Path]) -> list[Finding]:
    """ITS self-consistency of every run."""
    checker = ItsConsistencyChecker()
    findings: list[Finding] = []
    for reduce_dir in reduce_dirs:
        findings.extend(checker.check(reduce_dir))
    for finding in findings:
        logger.error(f"❌ {finding.reason}")
    return findings


def _write_csv(df: pd.DataFrame, path: Path) -> None:
    df.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def _write_json(data: Any, path: Path) -> None:
    path.write_bytes(orjson.dumps(data, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS) + b"\n")


def build_cross_run_report(out_dir: Path) -> Path:
    """Write every report artifact under <out>/report/ and return that directory."""
    found = find_reports(out_dir)
    if not found:
        raise InputError(f"No completed runs under {out_dir}")
    reduce_dirs = [d for d, _ in found]
    reports = [r for _, r in found]
    logger.info(f"Step 50: reporting on {len(reports)} runs under {out_dir}")

    report_dir = out_dir / REPORT_DIR
    report_dir.mkdir(parents=True, exist_ok=True)

    _write_csv(its_table(reports), report_dir / "its_table.csv")
    _write_csv(curves_frame(reports), report_dir / "curves.csv")
    _write_csv(fit_mse_frame(reports), report_dir / "fit_mse.csv")
    _write_json({"groups": stability_groups(reports)}, report_dir / "summary.json")
    plot_curves(reports, report_dir / "curves.svg")
    plot_regression(reports, report_dir / "regression.svg")

    findings = audit(reduce_dirs)
    _write_json(
        {
            "checked": [str(d.relative_to(out_dir)) for d in reduce_dirs],
            "errors": sum(1 for f in findings if f.severity == Severity.ERROR),
            "findings": [f.model_dump(mode="json") for f in findings],
        },
        report_dir / "audit.json",
    )
    if not findings:
        logger.info(f"✅ Audit passed for {len(reduce_dirs)} runs")
    return report_dir
