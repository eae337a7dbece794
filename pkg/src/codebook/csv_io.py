"""CSV artifacts for code sets, codebooks and counts (UTF-8, header row)."""

import logging
from pathlib import Path

import pandas as pd

from src.pipeline.errors import InputError
from src.schemas.models import (
    CodebookEntry,
    InitialCode,
    InterviewCodeSet,
    PositionCount,
    UniqueCumulativeCodebook,
)

logger = logging.getLogger(__name__)

CODES_COLUMNS = ["interview_id", "position", "name", "description", "quote"]
UCC_COLUMNS = ["index", "interview_id", "position", "name", "description", "quote"]
DUPLICATES_COLUMNS = [
    "position",
    "name",
    "description",
    "matched_unique_name",
    "matched_unique_index",
    "rationale",
]
COUNTS_COLUMNS = ["position", "cumulative_total", "cumulative_unique"]

UCC_FILE = "ucc.csv"
DUPLICATES_FILE = "duplicates.csv"
COUNTS_FILE = "counts.csv"


def _write(df: pd.DataFrame, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def _read(path: Path, columns: list[str]) -> pd.DataFrame:
    if not path.exists():
        raise InputError(f"CSV not found: {path}")
    df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise InputError(f"{path} is missing columns {missing}")
    return df


def write_code_set(code_set: InterviewCodeSet, path: Path) -> None:
    """Write one interview's codes."""
    rows = [
        [code_set.interview_id, code_set.position, c.name, c.description, c.quote]
        for c in code_set.codes
    ]
    _write(pd.DataFrame(rows, columns=CODES_COLUMNS), path)


def read_code_set(path: Path) -> InterviewCodeSet:
    """Read one interview's codes back."""
    df = _read(path, CODES_COLUMNS)
    if df.empty:
        raise InputError(f"{path} holds no codes")
    codes = [
        InitialCode(name=row["name"], description=row["description"], quote=row["quote"])
        for row in df.to_dict("records")
    ]
    return InterviewCodeSet(
        interview_id=str(df["interview_id"].iloc[0]),
        position=int(df["position"].iloc[0]),
        codes=codes,
    )


def read_code_sets(codes_dir: Path) -> list[InterviewCodeSet]:
    """Read every code CSV of a run, ordered by position."""
    paths = sorted(codes_dir.glob("*.csv"))
    if not paths:
        raise InputError(f"No code CSVs in {codes_dir}")
    code_sets = sorted((read_code_set(p) for p in paths), key=lambda s: s.position)
    positions = [s.position for s in code_sets]
    if positions != list(range(1, len(code_sets) + 1)):
        raise InputError(
            f"Code CSVs in {codes_dir} do not cover positions 1..{len(code_sets)}: {positions}"
        )
    return code_sets


def write_ucc(ucc: UniqueCumulativeCodebook, path: Path) -> None:
    """Write the unique codes in insertion order."""
    rows = [
        [i, e.interview_id, e.position, e.code.name, e.code.description, e.code.quote]
        for i, e in enumerate(ucc.entries)
    ]
    _write(pd.DataFrame(rows, columns=UCC_COLUMNS), path)


def read_ucc_entries(path: Path) -> list[CodebookEntry]:
    """Read a UCC CSV back into entries."""
    df = _read(path, UCC_COLUMNS)
    return [
        CodebookEntry(
            code=InitialCode(name=row["name"], description=row["description"], quote=row["quote"]),
            interview_id=row["interview_id"],
            position=int(row["position"]),
        )
        for row in df.to_dict("records")
    ]


def write_duplicates(ucc: UniqueCumulativeCodebook, path: Path) -> None:
    """Write the duplicate log, citing the surviving code when known."""
    rows = []
    for record in ucc.duplicates:
        index = record.matched_unique_index
        rows.append(
            [
                record.position,
                record.duplicate.name,
                record.duplicate.description,
                ucc.entries[index].code.name if index is not None else "",
                "" if index is None else str(index),
                record.rationale or "",
            ]
        )
    _write(pd.DataFrame(rows, columns=DUPLICATES_COLUMNS), path)


def count_csv_rows(path: Path) -> int:
    """Number of data rows in an artifact CSV."""
    return len(_read(path, []))


def write_counts(counts: list[PositionCount], path: Path) -> None:
    """Write per-position cumulative counts."""
    rows = [[c.position, c.cumulative_total, c.cumulative_unique] for c in counts]
    _write(pd.DataFrame(rows, columns=COUNTS_COLUMNS), path)


def read_counts(path: Path) -> list[PositionCount]:
    """Read per-position cumulative counts."""
    df = _read(path, COUNTS_COLUMNS)
    return [
        PositionCount(
            position=int(row["position"]),
            cumulative_total=int(row["cumulative_total"]),
            cumulative_unique=int(row["cumulative_unique"]),
        )
        for row in df.to_dict("records")
    ]
