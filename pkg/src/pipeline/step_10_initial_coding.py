"""Step 10: Initial coding of each interview with an independent prompt."""

import logging
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Optional

from pydantic import ValidationError

from checkers import CodeCountChecker, CodeLengthChecker
from src.codebook.csv_io import write_code_set
from src.llm.gateway import BaseGateway, ScriptedGateway
from src.llm.parsing import first_json_object, normalize_key
from src.llm.prompts import render_coding_prompt
from src.pipeline.config import RunConfig
from src.pipeline.errors import CodingParseError, InputError, PipelineError
from src.pipeline.step_00_corpus import apply_sequence
from src.schemas.models import (
    AnalysisSequence,
    Finding,
    InitialCode,
    InterviewCodeSet,
    RunManifest,
    Severity,
    Transcript,
)

logger = logging.getLogger(__name__)

CODES_DIR = "codes"
MANIFEST_FILE = "run_manifest.json"

# Normalized element keys accepted for each field
NAME_KEYS = ("name", "code", "codename", "code_name", "title", "label")
DESCRIPTION_KEYS = ("description", "desc", "code_description", "definition")
QUOTE_KEYS = ("quote", "quotation", "participant_quote", "quotes", "example_quote")


def build_coding_prompt(transcript: str, max_codes: int = 15) -> str:
    """Initial-coding prompt for one whole transcript."""
    if not transcript.strip():
        raise InputError("Cannot code an empty transcript")
    if max_codes < 1:
        raise InputError(f"max_codes must be >= 1, got {max_codes}")
    return render_coding_prompt(transcript, max_codes)


def _pick(element: dict[str, Any], keys: tuple[str, ...]) -> str:
    for key, value in element.items():
        if normalize_key(key) in keys and value is not None:
            if isinstance(value, list):
                return " ".join(str(v) for v in value)
            return str(value)
    return ""


def parse_code_set(raw: str, interview_id: str, position: int) -> InterviewCodeSet:
    """Turn a coding answer into a code set.

    The first JSON object in the answer wins (code fences and leading prose
    are tolerated). Elements without a name or description are skipped.
    """
    if not raw.strip():
        raise CodingParseError(f"Empty coding answer for {interview_id}", raw)

    payload = first_json_object(raw)
    if payload is None:
        raise CodingParseError(f"No JSON object in coding answer for {interview_id}", raw)

    codes_value = next((v for k, v in payload.items() if normalize_key(k) == "codes"), None)
    if not isinstance(codes_value, list):
        raise CodingParseError(f"Coding answer for {interview_id} has no 'Codes' array", raw)
    if not codes_value:
        raise CodingParseError(f"Coding answer for {interview_id} has an empty 'Codes' array", raw)

    codes: list[InitialCode] = []
    for i, element in enumerate(codes_value):
        if not isinstance(element, dict):
            logger.warning(f"{interview_id}: skipping non-object element {i} under 'Codes'")
            continue
        try:
            codes.append(
                InitialCode(
                    name=_pick(element, NAME_KEYS).strip(),
                    description=_pick(element, DESCRIPTION_KEYS).strip(),
                    quote=_pick(element, QUOTE_KEYS).strip(),
                )
            )
        except ValidationError:
            logger.warning(f"{interview_id}: skipping element {i} without name or description")

    if not codes:
        raise CodingParseError(
            f"Every element of the coding answer for {interview_id} was skipped", raw
        )
    return InterviewCodeSet(interview_id=interview_id, position=position, codes=codes)


def code_interview(
    transcript: Transcript, position: int, gateway: BaseGateway, max_codes: int
) -> InterviewCodeSet:
    """One independent coding call."""
    prompt = build_coding_prompt(transcript.text, max_codes)
    response = gateway.ask(prompt)
    code_set = parse_code_set(response.text, transcript.interview_id, position)
    logger.info(f"Position {position} ({transcript.interview_id}): {len(code_set.codes)} codes")
    return code_set


def _check(code_set: InterviewCodeSet, max_codes: int) -> list[Finding]:
    findings: list[Finding] = []
    for checker in (CodeLengthChecker(), CodeCountChecker(max_codes)):
        findings.extend(checker.check(code_set))
    for f in findings:
        if f.severity == Severity.WARNING:
            label = f"position {f.position} {f.code_name or ''}".rstrip()
            logger.warning(f"⚠️ [{f.checker}] {label}: {f.reason}")
    return findings


def code_corpus(
    transcripts: list[Transcript],
    sequence: AnalysisSequence,
    config: RunConfig,
    gateway: BaseGateway,
    cell_dir: Optional[Path] = None,
    iteration: int = 1,
) -> list[InterviewCodeSet]:
    """Code every interview in sequence order; persist one CSV per interview."""
    ordered = apply_sequence(transcripts, sequence)
    manifest = RunManifest(
        sequence=sequence,
        iteration=iteration,
        model_id=gateway.model_id,
        backend=gateway.backend_tag,
        temperature=gateway.temperature,
        max_codes=config.max_codes,
        interviews=[t.interview_id for t in ordered],
        started_at=datetime.now(timezone.utc).isoformat(),
    )

    # Sequence-mode scripts answer in call order, so calls must be serialized
    sequential = isinstance(gateway, ScriptedGateway) and gateway.is_sequential
    workers = 1 if sequential else config.max_concurrency
    logger.info(
        f"Step 10: coding {len(ordered)} interviews (sequence '{sequence.name}', "
        f"iteration {iteration}, {workers} worker(s))"
    )

    def run(position: int) -> InterviewCodeSet:
        transcript = ordered[position - 1]
        try:
            return code_interview(transcript, position, gateway, config.max_codes)
        except PipelineError as e:
            logger.error(
                f"❌ Coding failed at position {position} ({transcript.interview_id}): {e}"
            )
            e.add_note(f"failing position: {position} ({transcript.interview_id})")
            if cell_dir is not None:
                manifest.status = f"failed at position {position}"
                _write_manifest(manifest, cell_dir)
            raise

    positions = range(1, len(ordered) + 1)
    if workers == 1:
        code_sets = [run(p) for p in positions]
    else:
        code_sets = _run_pooled(run, positions, workers)

    for code_set in code_sets:
        manifest.findings.extend(_check(code_set, config.max_codes))
    manifest.code_counts = [len(s.codes) for s in code_sets]
    manifest.finished_at = datetime.now(timezone.utc).isoformat()
    manifest.status = "complete"

    if cell_dir is not None:
        for code_set in code_sets:
            write_code_set(code_set, code_set_path(cell_dir, code_set))
        _write_manifest(manifest, cell_dir)

    total = sum(manifest.code_counts)
    logger.info(f"✅ Coded {len(code_sets)} interviews, {total} codes in total")
    return code_sets


def _run_pooled(
    run: Callable[[int], InterviewCodeSet], positions: range, workers: int
) -> list[InterviewCodeSet]:
    """Results in position order; the first failure cancels every call not yet started."""
    pool = ThreadPoolExecutor(max_workers=workers)
    futures = [pool.submit(run, p) for p in positions]
    wait(futures, return_when=FIRST_EXCEPTION)
    failed = [f for f in futures if f.done() and not f.cancelled() and f.exception()]
    if failed:
        pool.shutdown(wait=False, cancel_futures=True)
        failed[0].result()
    pool.shutdown()
    return [f.result() for f in futures]


def code_set_path(cell_dir: Path, code_set: InterviewCodeSet) -> Path:
    """Per-interview CSV location inside a cell."""
    return cell_dir / CODES_DIR / f"{code_set.position:02d}_{code_set.interview_id}.csv"


def _write_manifest(manifest: RunManifest, cell_dir: Path) -> None:
    cell_dir.mkdir(parents=True, exist_ok=True)
    (cell_dir / MANIFEST_FILE).write_text(manifest.model_dump_json(indent=2), encoding="utf-8")


def read_manifest(cell_dir: Path) -> Optional[RunManifest]:
    """Manifest of a coding cell, if one was written."""
    path = cell_dir / MANIFEST_FILE
    if not path.exists():
        return None
    return RunManifest.model_validate_json(path.read_bytes())
