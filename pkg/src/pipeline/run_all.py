"""Main pipeline runner - command-line entry point for every verb."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Optional

import orjson

from src.judges import JUDGE_MODES
from src.pipeline.commands import (
    cmd_code,
    cmd_compile_judge,
    cmd_eval_similarity,
    cmd_its,
    cmd_reduce,
    cmd_report,
    cmd_sequences,
)
from src.pipeline.config import RunConfig, get_config
from src.pipeline.errors import PipelineError

logger = logging.getLogger(__name__)

DEFAULT_COMPILED_FILE = "compiled_judge.json"


def setup_logging(log_level: str = "INFO", log_format: str = "text") -> None:
    """Setup logging configuration."""
    level = getattr(logging, log_level.upper(), logging.INFO)

    if log_format == "json":

        class JSONFormatter(logging.Formatter):
            def format(self, record: logging.LogRecord) -> str:
                log_entry = {
                    "timestamp": self.formatTime(record),
                    "level": record.levelname,
                    "logger": record.name,
                    "message": record.getMessage(),
                }
                if record.exc_info:
                    log_entry["exception"] = self.formatException(record.exc_info)
                return orjson.dumps(log_entry).decode()

        handler = logging.StreamHandler()
        handler.setFormatter(JSONFormatter())
        logging.basicConfig(level=level, handlers=[handler], force=True)
    else:
        logging.basicConfig(
            level=level,
            format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
            force=True,
        )


def _emit(data: Any) -> None:
    sys.stdout.write(orjson.dumps(data, option=orjson.OPT_INDENT_2).decode() + "\n")


def build_parser() -> argparse.ArgumentParser:
    """Global flags go before the verb."""
    parser = argparse.ArgumentParser(
        prog="its-pipeline",
        description="LLM initial coding, codebook reduction and thematic saturation metrics",
    )
    parser.add_argument("--config", type=Path, default=None, help="TOML config file")
    parser.add_argument(
        "--out", type=Path, default=None, help="Output directory (compile-judge: output file)"
    )
    parser.add_argument("--seed", type=int, default=None, help="Seed for splits and search")
    parser.add_argument("--force", action="store_true", help="Redo completed cells")
    parser.add_argument("--judge", type=str, default=None, help=" | ".join(JUDGE_MODES))
    parser.add_argument(
        "--log-level",
        type=str,
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level",
    )
    parser.add_argument(
        "--log-format", type=str, default=None, choices=["text", "json"], help="Logging format"
    )

    verbs = parser.add_subparsers(dest="verb", required=True)

    code = verbs.add_parser("code", help="Initial coding of every (sequence, iteration) cell")
    code.add_argument(
        "--corpus", type=Path, default=None, help="Transcript directory or manifest CSV"
    )
    code.add_argument("--sequences", type=str, default=None, help="Comma-separated sequence names")
    code.add_argument("--iterations", type=int, default=None, help="Runs per sequence")
    code.add_argument("--script", type=Path, default=None, help="Scripted backend file")

    red = verbs.add_parser("reduce", help="Reduce coded cells to unique codes")
    red.add_argument("--run", type=Path, default=None, help="Single cell directory")
    red.add_argument("--script", type=Path, default=None, help="Scripted backend file")
    red.add_argument("--compiled-prompt", type=Path, default=None, help="Compiled judge file")

    comp = verbs.add_parser("compile-judge", help="Compile the few-shot pairwise judge")
    comp.add_argument("--bank", type=Path, default=None, help="Labeled example bank (JSON)")
    comp.add_argument("--script", type=Path, default=None, help="Scripted backend file")

    its = verbs.add_parser("its", help="ITS of a counts CSV, a reduce directory, or a pair")
    its.add_argument("target", type=Path, nargs="?", default=None)
    its.add_argument("--unique", type=int, default=None)
    its.add_argument("--total", type=int, default=None)

    sim = verbs.add_parser("eval-similarity", help="Cosine matrix between two UCC CSVs")
    sim.add_argument("--left", type=Path, required=True)
    sim.add_argument("--right", type=Path, required=True)
    sim.add_argument("--provider", type=str, default=None, choices=["hash", "file", "http"])

    verbs.add_parser("report", help="Cross-run ITS table, stability summary and curves")

    seq = verbs.add_parser("sequences", help="Print built-in analysis sequences")
    seq.add_argument("--n", type=int, default=12, help="Corpus size")
    seq.add_argument("--names", type=str, default=None, help="Comma-separated sequence names")
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    overrides: dict[str, Any] = {
        "seed": args.seed,
        "judge": args.judge,
        "force": True if args.force else None,
        "log_level": args.log_level,
        "log_format": args.log_format,
    }
    if args.out is not None and args.verb != "compile-judge":
        overrides["out_dir"] = args.out
    if getattr(args, "script", None) is not None:
        overrides["backend"] = "scripted"
        overrides["script_path"] = args.script
    if args.verb == "code":
        overrides["corpus"] = args.corpus
        overrides["iterations"] = args.iterations
        if args.sequences:
            overrides["sequences"] = [s.strip() for s in args.sequences.split(",") if s.strip()]
    if args.verb == "reduce":
        overrides["compiled_prompt"] = args.compiled_prompt
    if args.verb == "compile-judge":
        overrides["bank"] = args.bank
    return get_config(args.config, **overrides)


def run(args: argparse.Namespace) -> None:
    """Dispatch a parsed command line."""
    if args.verb == "sequences":
        names = args.names.split(",") if args.names else None
        _emit([s.model_dump(mode="json") for s in cmd_sequences(args.n, names)])
        return
    if args.verb == "its" and args.target is None:
        _emit({"its": cmd_its(unique=args.unique, total=args.total)})
        return

    config = _load_config(args)
    setup_logging(config.log_level, config.log_format)

    if args.verb == "code":
        cells = cmd_code(config)
        logger.info(f"✅ {len(cells)} coding cell(s) under {config.out_dir}")
    elif args.verb == "reduce":
        reports = cmd_reduce(config, args.run)
        for report in reports:
            logger.info(f"{report.run_id}: ITS {report.its_display}")
    elif args.verb == "compile-judge":
        out_path = args.out or config.out_dir / DEFAULT_COMPILED_FILE
        cmd_compile_judge(config, out_path)
    elif args.verb == "its":
        _emit(cmd_its(args.target).model_dump(mode="json"))
    elif args.verb == "eval-similarity":
        cmd_eval_similarity(config, args.left, args.right, config.out_dir, args.provider)
    elif args.verb == "report":
        report_dir = cmd_report(config.out_dir)
        logger.info(f"✅ Report written to {report_dir}")


def main(argv: Optional[list[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or "INFO", args.log_format or "text")

    try:
        run(args)
    except PipelineError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        for note in getattr(e, "__notes__", []):
            logger.error(f"   {note}")
        return e.exit_code
    except Exception as e:
        logger.error(f"Pipeline failed: {e}", exc_info=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
