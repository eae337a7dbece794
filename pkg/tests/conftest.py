"""Shared fixtures: code-set builders, a perfect teacher, and the 12-interview replay corpus."""

import re
from pathlib import Path
from typing import Optional

import orjson
import pytest

from src.judges.compiled import REASONING_PREFIX
from src.llm.gateway import BaseGateway
from src.schemas.models import (
    BackendTag,
    CompletionRequest,
    CompletionResponse,
    InitialCode,
    InterviewCodeSet,
    Meaning,
    MeaningExample,
)

FIXTURES = Path(__file__).parent.parent / "data" / "fixtures"

# Codes per interview of the replay corpus: 175 in total
E2E_COUNTS = [15, 14, 15, 15, 14, 15, 15, 14, 15, 14, 15, 14]
E2E_NEW_PER_INTERVIEW = 5

_PAIR_RE = re.compile(r"Text 1: (.*?)\n\nText 2: (.*?)\n\n", re.DOTALL)


def make_code(name: str, description: Optional[str] = None, quote: str = "") -> InitialCode:
    """Code with a default description derived from the name."""
    return InitialCode(name=name, description=description or f"About {name.lower()}.", quote=quote)


def make_sets(*names_per_set: list[str]) -> list[InterviewCodeSet]:
    """Code sets at positions 1..n from lists of code names."""
    return [
        InterviewCodeSet(
            interview_id=f"int{position:02d}",
            position=position,
            codes=[make_code(n) for n in names],
        )
        for position, names in enumerate(names_per_set, start=1)
    ]


class OracleTeacher(BaseGateway):
    """Answers pair prompts with the gold label of the last pair in the prompt."""

    backend_tag = BackendTag.SCRIPTED

    def __init__(self, examples: list[MeaningExample], model_id: str = "oracle") -> None:
        super().__init__(model_id)
        self.gold = {(e.text_1, e.text_2): e.meaning for e in examples}
        self.calls = 0

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        self.calls += 1
        text_1, text_2 = _PAIR_RE.findall(request.prompt + "\n\n")[-1]
        meaning = self.gold.get((text_1, text_2), Meaning.DIFFERENT)
        if request.prompt.rstrip().endswith(REASONING_PREFIX):
            text = f"produce the meaning. We compare both texts.\n\nMeaning: {meaning.phrase}"
        else:
            text = meaning.phrase
        return CompletionResponse(text=text, backend_tag=self.backend_tag)


@pytest.fixture
def bank_path() -> Path:
    """Example bank derived from the published compiled prompt."""
    return FIXTURES / "example_bank.json"


@pytest.fixture
def appendix_path() -> Path:
    """Published compiled judge prompt."""
    return FIXTURES / "compiled_judge_appendix.json"


def coding_answer(interview: int, count: int) -> str:
    """Scripted initial-coding answer with distinct code names."""
    codes = [
        {
            "Name": f"Theme {interview}-{j}",
            "Description": f"Participant {interview} talks about topic {j}.",
            "Quote": f"I said something about topic {j}",
        }
        for j in range(1, count + 1)
    ]
    return orjson.dumps({"Codes": codes}).decode()


def verdict(value: str) -> str:
    """Scripted zero-shot answer."""
    return orjson.dumps({"value_in_combined_unique": value}).decode()


def e2e_judge_answers() -> list[str]:
    """First five codes of every later interview are new, the rest are duplicates."""
    answers: list[str] = []
    for count in E2E_COUNTS[1:]:
        answers += [verdict("false")] * E2E_NEW_PER_INTERVIEW
        answers += [verdict("true")] * (count - E2E_NEW_PER_INTERVIEW)
    return answers


def write_script(path: Path, answers: list[str]) -> Path:
    """Sequence-mode scripted backend file."""
    path.write_bytes(orjson.dumps({"sequence": answers}))
    return path


@pytest.fixture
def e2e_corpus(tmp_path: Path) -> dict[str, Path]:
    """12 transcripts plus coding and judge scripts."""
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    for k in range(1, len(E2E_COUNTS) + 1):
        (corpus / f"interview_{k:02d}.txt").write_text(
            f"Interviewer: Tell me about your experience.\nParticipant {k}: It was a long year.\n",
            encoding="utf-8",
        )
    coding = write_script(
        tmp_path / "coding_script.json",
        [coding_answer(k, n) for k, n in enumerate(E2E_COUNTS, start=1)],
    )
    judge = write_script(tmp_path / "judge_script.json", e2e_judge_answers())
    return {"corpus": corpus, "coding_script": coding, "judge_script": judge, "root": tmp_path}
