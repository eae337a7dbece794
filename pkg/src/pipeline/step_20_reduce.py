"""Step 20: Cumulative reduction of the code sets to unique codes.

The UCC is seeded with the whole first code set; every later code is checked
for an exact match, then judged against the current UCC (same-interview codes
appended earlier included). A frontier checkpoint is written after every
completed position so an aborted run can be resumed.
"""

import hashlib
import logging
from pathlib import Path
from typing import Optional

import orjson

from checkers import ConservationChecker
from src.codebook.csv_io import (
    COUNTS_FILE,
    DUPLICATES_FILE,
    UCC_FILE,
    write_counts,
    write_duplicates,
    write_ucc,
)
from src.codebook.cumulative import (
    append_unique,
    build_tcc,
    close_position,
    find_exact_match,
    record_duplicate,
)
from src.judges.base import BaseJudge
from src.pipeline.errors import (
    DigestMismatchError,
    InputError,
    JudgeContractError,
    ProviderError,
    ReductionAborted,
    StructuralError,
)
from src.schemas.models import (
    InterviewCodeSet,
    PositionCount,
    ReductionFrontier,
    ReductionResult,
    UniqueCumulativeCodebook,
)

logger = logging.getLogger(__name__)

FRONTIER_FILE = "frontier.json"
EXACT_MATCH_RATIONALE = "exact match"


def code_sets_digest(code_sets: list[InterviewCodeSet]) -> str:
    """SHA-256 over the canonical JSON of the code sets."""
    payload = orjson.dumps(
        [s.model_dump(mode="json") for s in code_sets], option=orjson.OPT_SORT_KEYS
    )
    return hashlib.sha256(payload).hexdigest()


def write_frontier(frontier: ReductionFrontier, path: Path) -> None:
    """Persist the checkpoint via a temp file so a crash never leaves half a file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_bytes(orjson.dumps(frontier.model_dump(mode="json"), option=orjson.OPT_INDENT_2))
    tmp.replace(path)


def read_frontier(path: Path) -> ReductionFrontier:
    """Load a checkpoint."""
    if not path.exists():
        raise InputError(f"No frontier checkpoint at {path}")
    return ReductionFrontier.model_validate_json(path.read_bytes())


def _validate(code_sets: list[InterviewCodeSet]) -> None:
    if not code_sets:
        raise InputError("Nothing to reduce: no code sets")
    positions = [s.position for s in code_sets]
    if positions != sorted(positions) or len(set(positions)) != len(positions):
        raise StructuralError(f"Code sets must be ordered by unique position, got {positions}")


def _process_set(
    code_set: InterviewCodeSet, ucc: UniqueCumulativeCodebook, judge: BaseJudge
) -> None:
    for code_index, code in enumerate(code_set.codes):
        exact = find_exact_match(code, ucc)
        if exact is not None:
            logger.info(
                f"Position {code_set.position}: '{code.name}' "
                f"is an exact match of UCC entry {exact}"
            )
            record_duplicate(
                ucc, code, exact, EXACT_MATCH_RATIONALE, code_set.interview_id, code_set.position
            )
            continue

        try:
            verdict = judge.judge(code, ucc)
        except (ProviderError, JudgeContractError) as e:
            raise ReductionAborted(
                f"Judge '{judge.name}' failed at position {code_set.position}, "
                f"code {code_index} ('{code.name}'): {e}",
                position=code_set.position,
                code_index=code_index,
                cause=e,
            ) from e

        if verdict.is_duplicate:
            record_duplicate(
                ucc,
                code,
                verdict.matched_unique_index,
                verdict.rationale,
                code_set.interview_id,
                code_set.position,
            )
        else:
            append_unique(ucc, code, code_set.interview_id, code_set.position)


def _run(
    code_sets: list[InterviewCodeSet],
    judge: BaseJudge,
    ucc: UniqueCumulativeCodebook,
    counts: list[PositionCount],
    start: int,
    checkpoint_path: Optional[Path],
) -> ReductionResult:
    tcc = build_tcc(code_sets)
    digest = code_sets_digest(code_sets)

    def checkpoint(next_index: int) -> None:
        if checkpoint_path is None:
            return
        frontier = ReductionFrontier(
            code_sets_digest=digest,
            judge_name=judge.name,
            next_set_index=next_index,
            ucc=ucc,
            counts=counts,
            complete=next_index == len(code_sets),
        )
        write_frontier(frontier, checkpoint_path)

    for index in range(start, len(code_sets)):
        code_set = code_sets[index]
        if index == 0:
            for code in code_set.codes:
                append_unique(ucc, code, code_set.interview_id, code_set.position)
        else:
            _process_set(code_set, ucc, judge)
        counts.append(close_position(ucc, tcc.cumulative_total_at[index], code_set.position))
        logger.debug(
            f"Position {code_set.position}: total {counts[-1].cumulative_total}, "
            f"unique {counts[-1].cumulative_unique}"
        )
        checkpoint(index + 1)

    result = ReductionResult(tcc=tcc, ucc=ucc, counts=counts)
    for finding in ConservationChecker().check(result):
        raise StructuralError(finding.reason)
    return result


def reduce(
    code_sets: list[InterviewCodeSet],
    judge: BaseJudge,
    checkpoint_path: Optional[Path] = None,
) -> ReductionResult:
    """Reduce code sets (in position order) to the unique cumulative codebook."""
    _validate(code_sets)
    logger.info(f"Step 20: reducing {len(code_sets)} code sets with judge '{judge.name}'")
    result = _run(code_sets, judge, UniqueCumulativeCodebook(), [], 0, checkpoint_path)
    unique, total = len(result.ucc.entries), len(result.tcc.entries)
    logger.info(f"✅ Reduction complete: {unique} unique of {total} codes")
    return result


def resume(
    frontier: ReductionFrontier,
    code_sets: list[InterviewCodeSet],
    judge: BaseJudge,
    checkpoint_path: Optional[Path] = None,
) -> ReductionResult:
    """Continue a reduction from its checkpoint; a complete frontier is a no-op."""
    _validate(code_sets)
    if frontier.code_sets_digest != code_sets_digest(code_sets):
        raise DigestMismatchError("Frontier checkpoint does not match these code sets")
    if frontier.judge_name != judge.name:
        logger.warning(
            f"⚠️ Resuming a '{frontier.judge_name}' reduction with judge '{judge.name}'"
        )
    if frontier.complete or frontier.next_set_index >= len(code_sets):
        logger.info("Frontier is complete; nothing to resume")
        return ReductionResult(
            tcc=build_tcc(code_sets), ucc=frontier.ucc, counts=list(frontier.counts)
        )

    logger.info(
        f"Step 20: resuming at code set {frontier.next_set_index + 1}/{len(code_sets)} "
        f"with judge '{judge.name}'"
    )
    ucc = frontier.ucc.model_copy(deep=True)
    return _run(
        code_sets, judge, ucc, list(frontier.counts), frontier.next_set_index, checkpoint_path
    )


def write_reduction(result: ReductionResult, reduce_dir: Path) -> None:
    """UCC, duplicates and counts CSVs."""
    write_ucc(result.ucc, reduce_dir / UCC_FILE)
    write_duplicates(result.ucc, reduce_dir / DUPLICATES_FILE)
    write_counts(result.counts, reduce_dir / COUNTS_FILE)
