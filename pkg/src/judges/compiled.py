"""Compiled few-shot pairwise judge."""

import logging
import re
from typing import Optional

from src.codebook.cumulative import code_text
from src.judges.base import BaseJudge
from src.llm.gateway import BaseGateway
from src.pipeline.errors import JudgeParseError
from src.schemas.models import (
    CompiledJudgePrompt,
    InitialCode,
    JudgeVerdict,
    Meaning,
    MeaningExample,
    UniqueCumulativeCodebook,
)

logger = logging.getLogger(__name__)

SEPARATOR = "---"
REASONING_PREFIX = "Reasoning: Let's think step by step in order to"
REASONING_PLACEHOLDER = "${produce the meaning}. We ..."

_PHRASES = {
    Meaning.SIMILAR: re.compile(r"\bsimilar\s+meaning\b", re.IGNORECASE),
    Meaning.DIFFERENT: re.compile(r"\bdifferent\s+meaning\b", re.IGNORECASE),
}


def _demo_block(demo: MeaningExample, answer_prefix: str) -> str:
    lines = [f"Text 1: {demo.text_1}", "", f"Text 2: {demo.text_2}", ""]
    if demo.augmented and demo.rationale:
        lines += [f"{REASONING_PREFIX} {demo.rationale}", ""]
    lines.append(f"{answer_prefix} {demo.meaning.phrase}")
    return "\n".join(lines)


def render_pair_prompt(
    compiled: CompiledJudgePrompt, text_1: str, text_2: str, reasoning: bool = False
) -> str:
    """Instructions, field format, demos in stored order, then the open query.

    Without demos and without reasoning the prompt is just instructions plus query.
    """
    prefix = compiled.answer_prefix
    blocks = [compiled.signature_instructions]
    if compiled.demos or reasoning:
        format_lines = ["Follow the following format.", ""]
        format_lines += ["Text 1: ${text_1}", "", "Text 2: ${text_2}", ""]
        if reasoning or any(d.augmented for d in compiled.demos):
            format_lines += [f"{REASONING_PREFIX} {REASONING_PLACEHOLDER}", ""]
        format_lines.append(f"{prefix} ${{meaning}}")
        blocks.append("\n".join(format_lines))
    blocks += [_demo_block(d, prefix) for d in compiled.demos]

    query = [f"Text 1: {text_1}", "", f"Text 2: {text_2}", ""]
    query.append(REASONING_PREFIX if reasoning else prefix)
    blocks.append("\n".join(query))
    return f"\n\n{SEPARATOR}\n\n".join(blocks)


def parse_meaning(raw: str, answer_prefix: str = "Meaning:") -> Meaning:
    """Label after the final answer marker; exactly one phrase must occur."""
    if not raw.strip():
        raise JudgeParseError("Empty pairwise answer", raw)
    marker = raw.rfind(answer_prefix)
    tail = raw[marker + len(answer_prefix) :] if marker >= 0 else raw
    found = [label for label, pattern in _PHRASES.items() if pattern.search(tail)]
    if len(found) != 1:
        raise JudgeParseError(
            "Pairwise answer must state exactly one of 'similar meaning' / 'different meaning'", raw
        )
    return found[0]


def parse_rationale(raw: str, answer_prefix: str = "Meaning:") -> Optional[str]:
    """Reasoning written before the final answer marker, if any."""
    marker = raw.rfind(answer_prefix)
    if marker <= 0:
        return None
    head = raw[:marker].strip()
    if head.startswith(REASONING_PREFIX):
        head = head[len(REASONING_PREFIX) :].strip()
    elif head.startswith("Reasoning:"):
        head = head[len("Reasoning:") :].strip()
    return head or None


class CompiledJudge(BaseJudge):
    """Scans the UCC oldest-first and stops at the first similar pair."""

    def __init__(
        self, compiled: CompiledJudgePrompt, gateway: BaseGateway, reasoning: bool = False
    ) -> None:
        self.compiled = compiled
        self.gateway = gateway
        self.reasoning = reasoning

    @property
    def name(self) -> str:
        """Judge name."""
        return "compiled"

    def compare(self, text_1: str, text_2: str) -> tuple[Meaning, str]:
        """One pair call; returns the label and the raw answer."""
        prompt = render_pair_prompt(self.compiled, text_1, text_2, reasoning=self.reasoning)
        response = self.gateway.ask(prompt)
        return parse_meaning(response.text, self.compiled.answer_prefix), response.text

    def judge(self, code: InitialCode, ucc: UniqueCumulativeCodebook) -> JudgeVerdict:
        """Pairwise verdict with the matched UCC index."""
        candidate = code_text(code)
        raw = ""
        for index, entry in enumerate(ucc.entries):
            meaning, raw = self.compare(code_text(entry.code), candidate)
            if meaning == Meaning.SIMILAR:
                rationale: Optional[str] = None
                if self.reasoning:
                    rationale = parse_rationale(raw, self.compiled.answer_prefix)
                return JudgeVerdict(
                    is_duplicate=True,
                    matched_unique_index=index,
                    rationale=rationale,
                    raw_response=raw,
                    calls=index + 1,
                )
        return JudgeVerdict(is_duplicate=False, raw_response=raw, calls=len(ucc.entries))
