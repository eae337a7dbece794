"""Append-only cumulative codebook operations."""

import logging
import re
from typing import Optional

from src.pipeline.errors import StructuralError
from src.schemas.models import (
    CodebookEntry,
    DuplicateRecord,
    InitialCode,
    InterviewCodeSet,
    PositionCount,
    TotalCumulativeCodebook,
    UniqueCumulativeCodebook,
)

logger = logging.getLogger(__name__)


def code_text(code: InitialCode) -> str:
    """Render a code as "Name. Description", the input of every judge and embedder."""
    return f"{code.name.strip()}. {code.description.strip()}"


def normalize_key(code: InitialCode) -> str:
    """Lowercased, whitespace-collapsed name+description identity."""
    return re.sub(r"\s+", " ", f"{code.name} {code.description}").strip().lower()


def build_tcc(code_sets: list[InterviewCodeSet]) -> TotalCumulativeCodebook:
    """Concatenate code sets in analysis order."""
    tcc = TotalCumulativeCodebook()
    running = 0
    for code_set in code_sets:
        for code in code_set.codes:
            entry = CodebookEntry(
                code=code, interview_id=code_set.interview_id, position=code_set.position
            )
            tcc.entries.append(entry)
        running += len(code_set.codes)
        tcc.cumulative_total_at.append(running)
    return tcc


def append_unique(
    ucc: UniqueCumulativeCodebook, code: InitialCode, interview_id: str, position: int
) -> UniqueCumulativeCodebook:
    """Add a code that passed the not-duplicate verdict (or seeds the UCC)."""
    ucc.entries.append(CodebookEntry(code=code, interview_id=interview_id, position=position))
    return ucc


def record_duplicate(
    ucc: UniqueCumulativeCodebook,
    code: InitialCode,
    matched_index: Optional[int],
    rationale: Optional[str] = None,
    interview_id: str = "",
    position: int = 1,
) -> UniqueCumulativeCodebook:
    """Log a duplicate; entries are left untouched."""
    if matched_index is not None and not 0 <= matched_index < len(ucc.entries):
        raise StructuralError(
            f"Duplicate '{code.name}' matched UCC index {matched_index} "
            f"but the UCC holds {len(ucc.entries)} entries"
        )
    ucc.duplicates.append(
        DuplicateRecord(
            duplicate=code,
            interview_id=interview_id,
            position=position,
            matched_unique_index=matched_index,
            rationale=rationale,
        )
    )
    return ucc


def find_exact_match(code: InitialCode, ucc: UniqueCumulativeCodebook) -> Optional[int]:
    """Index of the oldest UCC entry with the same normalized name+description."""
    key = normalize_key(code)
    for index, entry in enumerate(ucc.entries):
        if normalize_key(entry.code) == key:
            return index
    return None


def close_position(
    ucc: UniqueCumulativeCodebook, cumulative_total: int, position: int
) -> PositionCount:
    """Record the running unique count once a position is fully processed."""
    unique = len(ucc.entries)
    ucc.cumulative_unique_at.append(unique)
    if unique > cumulative_total:
        raise StructuralError(
            f"Position {position}: {unique} uniques exceed {cumulative_total} total codes"
        )
    return PositionCount(
        position=position, cumulative_total=cumulative_total, cumulative_unique=unique
    )
