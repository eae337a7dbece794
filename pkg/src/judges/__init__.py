"""Duplicate judges and the factory that selects one by mode string."""

from pathlib import Path
from typing import Optional

from src.compiler.serialize import load_compiled
from src.judges.base import BaseJudge
from src.judges.compiled import CompiledJudge
from src.judges.stub import AlwaysDifferentJudge, AlwaysSimilarJudge, LookupTableJudge
from src.judges.zero_shot import ZeroShotJudge
from src.llm.gateway import BaseGateway
from src.pipeline.config import RunConfig
from src.pipeline.errors import ConfigError

JUDGE_MODES = (
    "zero-shot",
    "compiled",
    "stub:always-similar",
    "stub:always-different",
    "stub:table:<path>",
)


def build_judge(mode: str, config: RunConfig, gateway: Optional[BaseGateway] = None) -> BaseJudge:
    """Judge for a mode string: zero-shot | compiled | stub:<name>."""
    if mode == "stub:always-similar":
        return AlwaysSimilarJudge()
    if mode == "stub:always-different":
        return AlwaysDifferentJudge()
    if mode.startswith("stub:table:"):
        return LookupTableJudge.from_file(Path(mode.removeprefix("stub:table:")))

    if mode not in ("zero-shot", "compiled"):
        raise ConfigError(f"Unknown judge mode '{mode}', expected one of {', '.join(JUDGE_MODES)}")
    if gateway is None:
        raise ConfigError(f"Judge '{mode}' needs a gateway")
    if mode == "zero-shot":
        return ZeroShotJudge(gateway)

    if config.compiled_prompt is None:
        raise ConfigError("Judge 'compiled' needs compiled_prompt")
    compiled = load_compiled(config.compiled_prompt)
    return CompiledJudge(compiled, gateway, reasoning=config.judge_reasoning)


def judge_slug(judge: BaseJudge) -> str:
    """Directory-safe judge name."""
    return "".join(c if c.isalnum() or c in "-_" else "-" for c in judge.name)


__all__ = [
    "AlwaysDifferentJudge",
    "AlwaysSimilarJudge",
    "BaseJudge",
    "CompiledJudge",
    "LookupTableJudge",
    "ZeroShotJudge",
    "build_judge",
    "judge_slug",
]
