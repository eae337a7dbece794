"""Bootstrap few-shot compilation with random search over demo subsets."""

import logging
import random
from collections.abc import Callable
from typing import Optional

from src.compiler.example_bank import exact_match_metric, split
from src.judges.compiled import parse_meaning, parse_rationale, render_pair_prompt
from src.llm.gateway import BaseGateway
from src.pipeline.errors import CompileError, JudgeParseError
from src.schemas.models import (
    CompileMetadata,
    CompileParams,
    CompiledJudgePrompt,
    EvaluationResult,
    Meaning,
    MeaningExample,
)

logger = logging.getLogger(__name__)

SIGNATURE_INSTRUCTIONS = "Given the fields `text_1`, `text_2`, produce the fields `meaning`."

Metric = Callable[[Meaning, Meaning], bool]


def bootstrap_demos(
    train: list[MeaningExample],
    teacher: BaseGateway,
    metric: Metric = exact_match_metric,
    max_bootstrapped: int = 4,
    seed: int = 0,
    instructions: str = SIGNATURE_INSTRUCTIONS,
) -> list[MeaningExample]:
    """Keep teacher answers (with rationale) that match the gold label."""
    if max_bootstrapped < 0:
        raise CompileError("max_bootstrapped must be >= 0")
    if max_bootstrapped == 0:
        return []

    order = list(train)
    random.Random(seed).shuffle(order)
    demos: list[MeaningExample] = []

    for example in order:
        if len(demos) >= max_bootstrapped:
            break
        context = CompiledJudgePrompt(signature_instructions=instructions, demos=demos)
        prompt = render_pair_prompt(context, example.text_1, example.text_2, reasoning=True)
        response = teacher.ask(prompt)
        try:
            predicted = parse_meaning(response.text, context.answer_prefix)
        except JudgeParseError:
            logger.debug("Teacher answer without a usable meaning; example skipped")
            continue
        rationale = parse_rationale(response.text, context.answer_prefix)
        if rationale is None or not metric(example.meaning, predicted):
            continue
        demos.append(
            MeaningExample(
                text_1=example.text_1,
                text_2=example.text_2,
                meaning=example.meaning,
                rationale=rationale,
                augmented=True,
            )
        )

    logger.debug(f"Bootstrapped {len(demos)}/{max_bootstrapped} demos (seed {seed})")
    return demos


def evaluate(
    compiled: CompiledJudgePrompt,
    testset: list[MeaningExample],
    gateway: BaseGateway,
    reasoning: bool = False,
    metric: Metric = exact_match_metric,
) -> EvaluationResult:
    """Accuracy of the compiled prompt; parse failures count as misses."""
    if not testset:
        raise CompileError("Cannot evaluate on an empty set")
    passed = failures = 0
    for example in testset:
        prompt = render_pair_prompt(compiled, example.text_1, example.text_2, reasoning=reasoning)
        response = gateway.ask(prompt)
        try:
            predicted = parse_meaning(response.text, compiled.answer_prefix)
        except JudgeParseError:
            failures += 1
            continue
        if metric(example.meaning, predicted):
            passed += 1
    return EvaluationResult(
        accuracy=passed / len(testset), passed=passed, total=len(testset), parse_failures=failures
    )


def _candidate(
    pool: list[MeaningExample],
    teacher: BaseGateway,
    params: CompileParams,
    seed: int,
) -> list[MeaningExample]:
    augmented = bootstrap_demos(pool, teacher, exact_match_metric, params.max_bootstrapped, seed)
    used = {(d.text_1, d.text_2) for d in augmented}
    remaining = [e for e in pool if (e.text_1, e.text_2) not in used]
    raw = random.Random(seed).sample(remaining, min(params.max_raw, len(remaining)))
    return augmented + raw


def compile_judge(
    train: list[MeaningExample],
    params: CompileParams,
    gateway: BaseGateway,
    teacher: Optional[BaseGateway] = None,
    reasoning: bool = False,
) -> CompiledJudgePrompt:
    """Random search: num_candidates demo sets, best validation accuracy wins.

    Candidate i uses seed params.seed + i. Ties go to the lowest index.
    """
    teacher = teacher or gateway
    pool, validation = split(train, 1.0 - params.val_fraction, params.seed)
    logger.info(
        f"Compiling pairwise judge: {len(pool)} pool / {len(validation)} validation examples, "
        f"{params.num_candidates} candidates"
    )

    candidates: list[CompiledJudgePrompt] = []
    scores: list[float] = []
    for i in range(params.num_candidates):
        candidate = CompiledJudgePrompt(
            signature_instructions=SIGNATURE_INSTRUCTIONS,
            demos=_candidate(pool, teacher, params, params.seed + i),
            compile_seed=params.seed,
        )
        score = evaluate(candidate, validation, gateway, reasoning=reasoning).accuracy
        logger.info(f"Candidate {i}: {len(candidate.demos)} demos, validation accuracy {score:.3f}")
        candidates.append(candidate)
        scores.append(score)

    selected = max(range(len(scores)), key=lambda i: (scores[i], -i))
    best = candidates[selected].model_copy(update={"validation_score": scores[selected]})
    if best.validation_score == 0.0:
        logger.warning("⚠️ Every candidate scored 0 on validation; returning candidate 0")

    best.metadata = CompileMetadata(
        teacher_model_id=teacher.model_id,
        num_candidates=params.num_candidates,
        candidate_scores=scores,
        selected_candidate=selected,
        params=params,
        validation_set=validation,
    )
    score = best.validation_score
    logger.info(f"✅ Selected candidate {selected} (validation accuracy {score:.3f})")
    return best
