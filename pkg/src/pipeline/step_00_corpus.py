"""Step 00: Load the interview corpus and resolve analysis sequences."""

import logging
from pathlib import Path
from typing import Optional

import pandas as pd
from pydantic import ValidationError

from src.pipeline.errors import ConfigError, InputError
from src.schemas.models import AnalysisSequence, Transcript

logger = logging.getLogger(__name__)

# Fixed 12-interview orders from the order-induced-error literature
CONSTANTINOU_S3 = [6, 10, 9, 4, 12, 11, 7, 8, 1, 2, 3, 5]
CONSTANTINOU_S4 = [4, 2, 1, 11, 10, 7, 12, 9, 6, 3, 5, 8]
FIXED_ORDERS = {"constantinou-s3": CONSTANTINOU_S3, "constantinou-s4": CONSTANTINOU_S4}
BUILTIN_NAMES = ["identity", "reverse", *FIXED_ORDERS]


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"Cannot read transcript {path}: {e}") from e


def load_corpus(corpus: Path, max_chars: Optional[int] = None) -> list[Transcript]:
    """Load a directory of .txt transcripts (sorted by name) or a manifest CSV."""
    if not corpus.exists():
        raise ConfigError(f"Corpus not found: {corpus}")

    transcripts: list[Transcript] = []
    if corpus.is_dir():
        for path in sorted(corpus.glob("*.txt")):
            transcript = Transcript(interview_id=path.stem, text=_read_text(path), path=str(path))
            transcripts.append(transcript)
    else:
        df = pd.read_csv(corpus, dtype=str, keep_default_na=False)
        if not {"interview_id", "path"} <= set(df.columns):
            raise InputError(f"Manifest {corpus} needs columns interview_id,path")
        for row in df.to_dict("records"):
            path = Path(row["path"])
            if not path.is_absolute():
                path = corpus.parent / path
            transcripts.append(
                Transcript(interview_id=row["interview_id"], text=_read_text(path), path=str(path))
            )

    if not transcripts:
        raise InputError(f"Corpus {corpus} holds no transcripts")
    ids = [t.interview_id for t in transcripts]
    if len(set(ids)) != len(ids):
        raise InputError(f"Duplicate interview ids in {corpus}")

    for t in transcripts:
        if not t.text.strip():
            raise InputError(f"Transcript {t.interview_id} is empty")
        if max_chars is not None and len(t.text) > max_chars:
            raise ConfigError(
                f"Transcript {t.interview_id} has {len(t.text)} characters, over the "
                f"configured limit of {max_chars}"
            )

    logger.info(f"Loaded {len(transcripts)} transcripts from {corpus}")
    return transcripts


def builtin_sequences(n: int) -> list[AnalysisSequence]:
    """All four built-in orders; only defined for a 12-interview corpus.

    Identity and reverse alone are available for any n through resolve_sequence.
    """
    if n != len(CONSTANTINOU_S3):
        raise ConfigError(f"Built-in sequences need a 12-interview corpus, got {n}")
    return [resolve_sequence(name, n) for name in BUILTIN_NAMES]


def resolve_sequence(
    name: str, n: int, custom: Optional[dict[str, list[int]]] = None
) -> AnalysisSequence:
    """Named order over n interviews."""
    custom = custom or {}
    if name in custom:
        order = custom[name]
    elif name == "identity":
        order = list(range(1, n + 1))
    elif name == "reverse":
        order = list(range(n, 0, -1))
    elif name in FIXED_ORDERS:
        order = FIXED_ORDERS[name]
    else:
        raise ConfigError(f"Unknown sequence '{name}'")

    if len(order) != n:
        raise ConfigError(
            f"Sequence '{name}' has {len(order)} positions but the corpus has {n} interviews"
        )
    try:
        return AnalysisSequence(name=name, order=list(order))
    except ValidationError as e:
        raise ConfigError(f"Sequence '{name}' is invalid: {e}") from e


def apply_sequence(transcripts: list[Transcript], sequence: AnalysisSequence) -> list[Transcript]:
    """Transcripts in analysis order: position k holds corpus item order[k-1]."""
    if len(sequence.order) != len(transcripts):
        raise ConfigError(
            f"Sequence '{sequence.name}' covers {len(sequence.order)} interviews, "
            f"corpus has {len(transcripts)}"
        )
    return [transcripts[i - 1] for i in sequence.order]
