"""JSON layout of compiled judge prompts.

The file holds a single program object under ``generate_answer`` (demos,
instructions and answer prefix) with compile provenance stored alongside
under ``compile_metadata``.
"""

import logging
from pathlib import Path
from typing import Any

import orjson
from pydantic import ValidationError

from src.pipeline.errors import ConfigError
from src.schemas.models import CompileMetadata, CompiledJudgePrompt, MeaningExample

logger = logging.getLogger(__name__)

PROGRAM_KEY = "generate_answer"
METADATA_KEY = "compile_metadata"


def _demo_to_dict(demo: MeaningExample) -> dict[str, Any]:
    if demo.augmented:
        return {
            "augmented": True,
            "text_1": demo.text_1,
            "text_2": demo.text_2,
            "rationale": demo.rationale,
            "meaning": demo.meaning.phrase,
        }
    return {"text_1": demo.text_1, "text_2": demo.text_2, "meaning": demo.meaning.phrase}


def to_dict(compiled: CompiledJudgePrompt) -> dict[str, Any]:
    """Program object plus metadata (omitted when there is no provenance)."""
    data: dict[str, Any] = {
        PROGRAM_KEY: {
            "lm": None,
            "traces": [],
            "train": [],
            "demos": [_demo_to_dict(d) for d in compiled.demos],
            "signature_instructions": compiled.signature_instructions,
            "signature_prefix": compiled.answer_prefix,
            "extended_signature_instructions": compiled.signature_instructions,
            "extended_signature_prefix": compiled.answer_prefix,
        }
    }
    has_provenance = (
        compiled.validation_score is not None
        or compiled.compile_seed is not None
        or compiled.metadata != CompileMetadata()
    )
    if has_provenance:
        data[METADATA_KEY] = {
            "validation_score": compiled.validation_score,
            "compile_seed": compiled.compile_seed,
            **compiled.metadata.model_dump(mode="json"),
        }
    return data


def from_dict(data: dict[str, Any]) -> CompiledJudgePrompt:
    """Inverse of to_dict; schema violations raise ConfigError."""
    program = data.get(PROGRAM_KEY)
    if not isinstance(program, dict):
        raise ConfigError(f"Compiled prompt lacks the '{PROGRAM_KEY}' program object")
    if "signature_instructions" not in program:
        raise ConfigError("Compiled prompt lacks signature_instructions")

    meta = dict(data.get(METADATA_KEY) or {})
    try:
        return CompiledJudgePrompt(
            signature_instructions=program["signature_instructions"],
            answer_prefix=program.get("signature_prefix", "Meaning:"),
            demos=[MeaningExample.model_validate(d) for d in program.get("demos", [])],
            validation_score=meta.pop("validation_score", None),
            compile_seed=meta.pop("compile_seed", None),
            metadata=CompileMetadata.model_validate(meta),
        )
    except ValidationError as e:
        raise ConfigError(f"Compiled prompt is invalid: {e}") from e


def serialize(compiled: CompiledJudgePrompt) -> bytes:
    """Stable, indented JSON bytes."""
    return orjson.dumps(to_dict(compiled), option=orjson.OPT_INDENT_2) + b"\n"


def save_compiled(compiled: CompiledJudgePrompt, path: Path) -> None:
    """Write a compiled prompt file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(serialize(compiled))
    logger.info(f"Saved compiled judge prompt ({len(compiled.demos)} demos) to {path}")


def load_compiled(path: Path) -> CompiledJudgePrompt:
    """Read a compiled prompt file."""
    if not path.exists():
        raise ConfigError(f"Compiled prompt not found: {path}")
    try:
        data = orjson.loads(path.read_bytes())
    except orjson.JSONDecodeError as e:
        raise ConfigError(f"Compiled prompt {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Compiled prompt {path} must be a JSON object")
    return from_dict(data)
