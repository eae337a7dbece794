"""Labeled example banks for compiling the pairwise judge."""

import logging
import math
import random
from pathlib import Path
from typing import Any, Union

import orjson
from pydantic import ValidationError

from src.pipeline.errors import CompileError
from src.schemas.models import ExampleBank, Meaning, MeaningExample

logger = logging.getLogger(__name__)


def load_example_bank(path: Path) -> ExampleBank:
    """Parse a JSON array of {text_1, text_2, meaning} and validate its labels."""
    if not path.exists():
        raise CompileError(f"Example bank not found: {path}")
    try:
        data: Any = orjson.loads(path.read_bytes())
    except orjson.JSONDecodeError as e:
        raise CompileError(f"Example bank {path} is not valid JSON: {e}") from e
    if isinstance(data, dict):
        data = data.get("examples", [])
    if not isinstance(data, list) or not data:
        raise CompileError(f"Example bank {path} is empty")

    examples: list[MeaningExample] = []
    for i, item in enumerate(data):
        try:
            examples.append(MeaningExample.model_validate(item))
        except ValidationError as e:
            raise CompileError(f"Example {i} in {path} is invalid: {e}") from e

    bank = ExampleBank(examples=examples)
    counts = bank.counts
    missing = [label for label, n in counts.items() if n == 0]
    if missing:
        raise CompileError(f"Example bank {path} has no '{missing[0]}' examples")
    logger.info(f"Loaded example bank {path.name}: {len(examples)} examples {counts}")
    return bank


def split(
    bank: Union[ExampleBank, list[MeaningExample]], train_fraction: float, seed: int
) -> tuple[list[MeaningExample], list[MeaningExample]]:
    """Seeded shuffle, then floor(n * train_fraction) examples go to train."""
    if not 0.0 < train_fraction < 1.0:
        raise CompileError(f"train_fraction must be in (0, 1), got {train_fraction}")
    examples = list(bank.examples if isinstance(bank, ExampleBank) else bank)
    random.Random(seed).shuffle(examples)
    n_train = math.floor(len(examples) * train_fraction)
    if n_train == 0 or n_train == len(examples):
        raise CompileError(
            f"Splitting {len(examples)} examples at {train_fraction} leaves one side empty"
        )
    return examples[:n_train], examples[n_train:]


def exact_match_metric(gold: Meaning, predicted: Meaning) -> bool:
    """True iff both labels agree."""
    return gold == predicted
