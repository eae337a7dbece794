"""Experiment-matrix verbs behind the CLI.

Layout under the output directory (a pure function of the config):
    <out>/<sequence>/iter_NN/codes/NN_<interview>.csv
    <out>/<sequence>/iter_NN/run_manifest.json
    <out>/<sequence>/iter_NN/reduce_<judge>/{ucc,duplicates,counts}.csv, report.json, frontier.json
    <out>/its_summary.csv
    <out>/report/...

Completed cells are skipped unless force is set.
"""

import logging
from collections.abc import Callable
from contextlib import ExitStack
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, TypeVar

import orjson
import pandas as pd

from checkers import REPORT_FILE
from src.codebook.csv_io import COUNTS_FILE, read_code_sets, read_counts
from src.compiler.example_bank import load_example_bank, split
from src.compiler.optimizer import compile_judge, evaluate
from src.compiler.serialize import save_compiled
from src.judges import build_judge, judge_slug
from src.judges.base import BaseJudge
from src.llm.embeddings import build_embedding_provider
from src.llm.gateway import BaseGateway, ScriptedGateway, build_gateway
from src.pipeline.config import RunConfig
from src.pipeline.errors import ConfigError, InputError
from src.pipeline.step_00_corpus import BUILTIN_NAMES, load_corpus, resolve_sequence
from src.pipeline.step_10_initial_coding import CODES_DIR, code_corpus, read_manifest
from src.pipeline.step_20_reduce import (
    FRONTIER_FILE,
    read_frontier,
    reduce,
    resume,
    write_reduction,
)
from src.pipeline.step_30_saturation import build_report, its_ratio, write_report
from src.pipeline.step_40_similarity import (
    export_matrix,
    optimal_diagonal_ordering,
    similarity_between,
)
from src.pipeline.step_50_report import build_cross_run_report, find_reports
from src.schemas.models import (
    AnalysisSequence,
    Assignment,
    CompiledJudgePrompt,
    CompileParams,
    SaturationReport,
    SimilarityMatrix,
)

logger = logging.getLogger(__name__)

SUMMARY_FILE = "its_summary.csv"
SUMMARY_COLUMNS = ["run_id", "sequence", "iteration", "judge", "total_codes", "unique_codes", "its"]

T = TypeVar("T")
R = TypeVar("R")


def cell_dir(out_dir: Path, sequence_name: str, iteration: int) -> Path:
    """Directory of one (sequence, iteration) cell."""
    return out_dir / sequence_name / f"iter_{iteration:02d}"


def reduce_dir(cell: Path, judge: BaseJudge) -> Path:
    """Directory of one reduction inside a cell."""
    return cell / f"reduce_{judge_slug(judge)}"


def configured_sequences(config: RunConfig, n: int) -> list[AnalysisSequence]:
    """Every configured sequence resolved against a corpus of n interviews."""
    if not config.sequences:
        raise ConfigError("No sequences configured")
    return [resolve_sequence(name, n, config.custom_sequences) for name in config.sequences]


def _cells(config: RunConfig) -> list[tuple[str, int]]:
    return [(name, it) for name in config.sequences for it in range(1, config.iterations + 1)]


def _map_cells(
    fn: Callable[[T], R], items: list[T], config: RunConfig, gateway: Optional[BaseGateway]
) -> list[R]:
    # Sequence-mode scripts answer in call order; cells must not interleave
    sequential = isinstance(gateway, ScriptedGateway) and gateway.is_sequential
    workers = 1 if sequential else min(config.cell_workers, max(len(items), 1))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def cmd_code(config: RunConfig, gateway: Optional[BaseGateway] = None) -> list[Path]:
    """Initial coding for every (sequence, iteration) cell; returns the cell directories."""
    if config.corpus is None:
        raise ConfigError("corpus must be configured for 'code'")
    transcripts = load_corpus(config.corpus, config.max_transcript_chars)
    sequences = {s.name: s for s in configured_sequences(config, len(transcripts))}
    owned = ExitStack()
    if gateway is None:
        gateway = owned.enter_context(build_gateway(config))

    def run_cell(cell: tuple[str, int]) -> Path:
        name, iteration = cell
        directory = cell_dir(config.out_dir, name, iteration)
        manifest = read_manifest(directory)
        if manifest is not None and manifest.status == "complete" and not config.force:
            logger.info(f"Skip {directory}: already coded")
            return directory
        try:
            code_corpus(transcripts, sequences[name], config, gateway, directory, iteration)
        except Exception as e:
            e.add_note(f"cell: sequence '{name}', iteration {iteration}")
            raise
        return directory

    with owned:
        return _map_cells(run_cell, _cells(config), config, gateway)


def reduce_cell(
    cell: Path, judge: BaseJudge, config: RunConfig, iteration: int = 1
) -> SaturationReport:
    """Reduce one coded cell (resuming an interrupted run) and write its report."""
    target = reduce_dir(cell, judge)
    report_path = target / REPORT_FILE
    frontier_path = target / FRONTIER_FILE
    run_id = f"{cell.parent.name}/{cell.name}/{judge_slug(judge)}"

    if report_path.exists() and not config.force:
        logger.info(f"Skip {target}: already reduced")
        return SaturationReport.model_validate_json(report_path.read_bytes())

    code_sets = read_code_sets(cell / CODES_DIR)
    if frontier_path.exists() and not config.force:
        result = resume(read_frontier(frontier_path), code_sets, judge, frontier_path)
    else:
        frontier_path.unlink(missing_ok=True)
        result = reduce(code_sets, judge, frontier_path)

    write_reduction(result, target)
    manifest = read_manifest(cell)
    sequence_name = manifest.sequence.name if manifest else cell.parent.name
    report = build_report(run_id, sequence_name, result.counts, judge.name, iteration)
    write_report(report, report_path)
    return report


def cmd_reduce(
    config: RunConfig,
    run_dir: Optional[Path] = None,
    gateway: Optional[BaseGateway] = None,
    judge: Optional[BaseJudge] = None,
) -> list[SaturationReport]:
    """Reduce one cell (run_dir) or every configured cell that has codes."""
    with ExitStack() as owned:
        if judge is None:
            needs_gateway = not config.judge.startswith("stub:")
            if needs_gateway and gateway is None:
                gateway = owned.enter_context(build_gateway(config))
            judge = build_judge(config.judge, config, gateway)
        reports = _reduce_cells(config, run_dir, judge, gateway)

    update_summary(run_dir.parent.parent if run_dir is not None else config.out_dir)
    return reports


def _reduce_cells(
    config: RunConfig, run_dir: Optional[Path], judge: BaseJudge, gateway: Optional[BaseGateway]
) -> list[SaturationReport]:
    if run_dir is not None:
        return [reduce_cell(run_dir, judge, config, _iteration_of(run_dir))]
    cells = [cell_dir(config.out_dir, name, it) for name, it in _cells(config)]
    cells = [c for c in cells if (c / CODES_DIR).exists()]
    if not cells:
        raise InputError(f"No coded cells under {config.out_dir}")
    return _map_cells(
        lambda c: reduce_cell(c, judge, config, _iteration_of(c)), cells, config, gateway
    )


def _iteration_of(cell: Path) -> int:
    try:
        return int(cell.name.removeprefix("iter_"))
    except ValueError:
        return 1


def update_summary(out_dir: Path) -> Path:
    """Rewrite <out>/its_summary.csv from every report under out_dir."""
    rows = [
        [r.run_id, r.sequence_name, r.iteration, r.judge, r.total_codes, r.unique_codes, r.its]
        for _, r in find_reports(out_dir)
    ]
    path = out_dir / SUMMARY_FILE
    pd.DataFrame(rows, columns=SUMMARY_COLUMNS).to_csv(
        path, index=False, encoding="utf-8", lineterminator="\n"
    )
    return path


def cmd_its(
    target: Optional[Path] = None, unique: Optional[int] = None, total: Optional[int] = None
) -> SaturationReport | float:
    """ITS of a counts CSV / reduce directory, or of a bare (unique, total) pair."""
    if target is None:
        if unique is None or total is None:
            raise ConfigError(
                "'its' needs a counts CSV, a reduce directory, or --unique and --total"
            )
        return its_ratio(unique, total)
    counts_path = target / COUNTS_FILE if target.is_dir() else target
    return build_report(str(target), target.parent.name, read_counts(counts_path))


def cmd_compile_judge(
    config: RunConfig,
    out_path: Path,
    gateway: Optional[BaseGateway] = None,
    teacher: Optional[BaseGateway] = None,
) -> CompiledJudgePrompt:
    """Split the bank, compile on train, score on test, save the prompt file."""
    if config.bank is None:
        raise ConfigError("compile-judge needs an example bank (--bank)")
    bank = load_example_bank(config.bank)
    train, test = split(bank, config.train_fraction, config.seed)
    params = CompileParams(
        max_bootstrapped=config.max_bootstrapped,
        max_raw=config.max_raw,
        num_candidates=config.num_candidates,
        val_fraction=config.val_fraction,
        seed=config.seed,
    )
    with ExitStack() as owned:
        if gateway is None:
            gateway = owned.enter_context(build_gateway(config))
        if teacher is None and config.teacher_model_id and config.backend == "live":
            teacher = owned.enter_context(build_gateway(config, model_id=config.teacher_model_id))
        reasoning = config.judge_reasoning
        compiled = compile_judge(train, params, gateway, teacher, reasoning=reasoning)
        result = evaluate(compiled, test, gateway, reasoning=reasoning)
    compiled.metadata.test_accuracy = result.accuracy
    logger.info(
        f"Held-out accuracy {result.accuracy:.3f} ({result.passed}/{result.total}, "
        f"{result.parse_failures} unparsable)"
    )
    save_compiled(compiled, out_path)
    return compiled


def cmd_eval_similarity(
    config: RunConfig,
    left: Path,
    right: Path,
    out_dir: Path,
    provider: Optional[str] = None,
) -> tuple[Assignment, SimilarityMatrix]:
    """Cosine matrix between two UCC CSVs, raw and diagonally reordered."""
    with build_embedding_provider(config, provider) as embedder:
        matrix = similarity_between(left, right, embedder, config.embedding_batch_size)
    assignment, ordered = optimal_diagonal_ordering(matrix)

    threshold = config.highlight_threshold
    export_matrix(matrix, out_dir / "similarity.csv", out_dir / "similarity.svg", threshold)
    export_matrix(
        ordered, out_dir / "similarity_ordered.csv", out_dir / "similarity_ordered.svg", threshold
    )
    (out_dir / "assignment.json").write_bytes(
        orjson.dumps(assignment.model_dump(mode="json"), option=orjson.OPT_INDENT_2) + b"\n"
    )
    logger.info(
        f"✅ Matched {len(assignment.pairs)} code pairs, mean similarity "
        f"{assignment.score / max(len(assignment.pairs), 1):.3f}"
    )
    return assignment, ordered


def cmd_report(out_dir: Path) -> Path:
    """Cross-run report artifacts."""
    update_summary(out_dir)
    return build_cross_run_report(out_dir)


def cmd_sequences(n: int, names: Optional[list[str]] = None) -> list[AnalysisSequence]:
    """Built-in orders over n interviews (all four need n = 12)."""
    if names is None:
        names = list(BUILTIN_NAMES) if n == 12 else ["identity", "reverse"]
    return [resolve_sequence(name, n) for name in names]
