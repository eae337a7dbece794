"""Tests for the zero-shot, compiled and stub duplicate judges."""

from pathlib import Path

import orjson
import pytest

from src.codebook.cumulative import append_unique, code_text
from src.compiler.serialize import load_compiled
from src.judges import build_judge, judge_slug
from src.judges.compiled import (
    REASONING_PREFIX,
    CompiledJudge,
    parse_meaning,
    parse_rationale,
    render_pair_prompt,
)
from src.judges.stub import AlwaysDifferentJudge, AlwaysSimilarJudge, LookupTableJudge
from src.judges.zero_shot import ZeroShotJudge, parse_list_verdict
from src.llm.gateway import scripted_backend
from src.pipeline.config import get_config
from src.pipeline.errors import ConfigError, JudgeParseError, StructuralError
from src.schemas.models import (
    CompiledJudgePrompt,
    Meaning,
    MeaningExample,
    UniqueCumulativeCodebook,
)
from tests.conftest import make_code

INSTRUCTIONS = "Given the fields `text_1`, `text_2`, produce the fields `meaning`."


def _ucc(*names: str) -> UniqueCumulativeCodebook:
    ucc = UniqueCumulativeCodebook()
    for name in names:
        append_unique(ucc, make_code(name), "int01", 1)
    return ucc


@pytest.mark.parametrize(
    "raw, expected",
    [
        ('{"value_in_combined_unique": "true"}', True),
        ('{"value_in_combined_unique": "false"}', False),
        ('{"value_in_combined_unique": true}', True),
        ("```json\n{\"Value In Combined Unique\": \"'TRUE'\"}\n```", True),
        ('Answer: {"value-in-combined-unique": "False"}', False),
    ],
)
def test_parse_list_verdict(raw: str, expected: bool) -> None:
    """Booleans and case-insensitive 'true'/'false' strings are accepted."""
    assert parse_list_verdict(raw) is expected


@pytest.mark.parametrize(
    "raw", ["", "true", '{"answer": "true"}', '{"value_in_combined_unique": "maybe"}']
)
def test_parse_list_verdict_contract_violations(raw: str) -> None:
    """Missing key or an unknown value breaks the judge contract (exit 4)."""
    with pytest.raises(JudgeParseError) as exc:
        parse_list_verdict(raw)
    assert exc.value.exit_code == 4


def test_zero_shot_prompt_lists_the_ucc() -> None:
    """One call per candidate; the prompt quotes the value and every UCC entry."""
    gateway = scripted_backend(['{"value_in_combined_unique": "true"}'])
    verdict = ZeroShotJudge(gateway).judge(make_code("Fear"), _ucc("Anxiety", "Hope"))

    assert verdict.is_duplicate
    assert verdict.matched_unique_index is None
    assert verdict.calls == 1
    prompt = gateway.history[0].prompt
    assert f"value: ```{code_text(make_code('Fear'))}```" in prompt
    assert "Anxiety. About anxiety., Hope. About hope." in prompt


def test_zero_shot_rejects_empty_ucc() -> None:
    """An empty UCC is a codebook invariant violation and makes no call."""
    gateway = scripted_backend(['{"value_in_combined_unique": "true"}'])
    with pytest.raises(StructuralError):
        ZeroShotJudge(gateway).judge(make_code("Fear"), UniqueCumulativeCodebook())
    assert gateway.history == []


def test_render_pair_prompt_zero_demos() -> None:
    """No demos: instructions and the open query only."""
    prompt = render_pair_prompt(CompiledJudgePrompt(signature_instructions=INSTRUCTIONS), "A", "B")
    assert prompt == f"{INSTRUCTIONS}\n\n---\n\nText 1: A\n\nText 2: B\n\nMeaning:"


def test_render_pair_prompt_with_demos_and_reasoning() -> None:
    """Demos in stored order; augmented demos show their rationale; reasoning opens the field."""
    compiled = CompiledJudgePrompt(
        signature_instructions=INSTRUCTIONS,
        demos=[
            MeaningExample(
                text_1="x1",
                text_2="x2",
                meaning=Meaning.SIMILAR,
                rationale="produce the meaning. Same topic.",
                augmented=True,
            ),
            MeaningExample(text_1="y1", text_2="y2", meaning=Meaning.DIFFERENT),
        ],
    )
    prompt = render_pair_prompt(compiled, "A", "B", reasoning=True)
    blocks = prompt.split("\n\n---\n\n")

    assert blocks[0] == INSTRUCTIONS
    assert blocks[1].startswith("Follow the following format.")
    assert blocks[2] == (
        "Text 1: x1\n\nText 2: x2\n\n"
        f"{REASONING_PREFIX} produce the meaning. Same topic.\n\n"
        "Meaning: the two texts have a similar meaning"
    )
    assert blocks[3] == (
        "Text 1: y1\n\nText 2: y2\n\nMeaning: the two texts have a different meaning"
    )
    assert blocks[4] == f"Text 1: A\n\nText 2: B\n\n{REASONING_PREFIX}"


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("the two texts have a similar meaning", Meaning.SIMILAR),
        ("Meaning: the two texts have a DIFFERENT  meaning", Meaning.DIFFERENT),
        (
            "produce the meaning. One says different meaning.\n\nMeaning: the two texts have a "
            "similar meaning",
            Meaning.SIMILAR,
        ),
    ],
)
def test_parse_meaning(raw: str, expected: Meaning) -> None:
    """The phrase after the last answer marker decides."""
    assert parse_meaning(raw) == expected


@pytest.mark.parametrize(
    "raw",
    [
        "",
        "they are alike",
        "similar meaning or different meaning",
        "Meaning: the two texts have a dissimilar meaning",
        "Meaning: an indifferent meaning",
    ],
)
def test_parse_meaning_contract_violations(raw: str) -> None:
    """Zero or both phrases break the contract; phrases inside longer words do not count."""
    with pytest.raises(JudgeParseError):
        parse_meaning(raw)


def test_parse_rationale() -> None:
    """Reasoning before the marker, without the field prefix."""
    raw = f"{REASONING_PREFIX} produce the meaning. Both are fear.\n\nMeaning: similar meaning"
    assert parse_rationale(raw) == "produce the meaning. Both are fear."
    assert parse_rationale("Meaning: similar meaning") is None


def test_compiled_judge_stops_at_first_similar() -> None:
    """Oldest-first scan; calls equal the matched index + 1."""
    gateway = scripted_backend(
        ["the two texts have a different meaning", "the two texts have a similar meaning"]
    )
    judge = CompiledJudge(CompiledJudgePrompt(signature_instructions=INSTRUCTIONS), gateway)
    verdict = judge.judge(make_code("Fear"), _ucc("Hope", "Anxiety", "Joy"))

    assert verdict.is_duplicate
    assert verdict.matched_unique_index == 1
    assert verdict.calls == 2
    hope, fear = code_text(make_code("Hope")), code_text(make_code("Fear"))
    assert gateway.history[0].prompt.endswith(f"Text 1: {hope}\n\nText 2: {fear}\n\nMeaning:")


def test_compiled_judge_no_match_compares_everything() -> None:
    """No similar pair: one call per UCC entry."""
    gateway = scripted_backend(["the two texts have a different meaning"] * 3)
    judge = CompiledJudge(CompiledJudgePrompt(signature_instructions=INSTRUCTIONS), gateway)
    verdict = judge.judge(make_code("Fear"), _ucc("Hope", "Anxiety", "Joy"))
    assert not verdict.is_duplicate
    assert verdict.calls == 3


def test_compiled_judge_keeps_rationale_in_reasoning_mode() -> None:
    """Reasoning mode stores the rationale of the matching comparison."""
    gateway = scripted_backend(["produce the meaning. Both fear.\n\nMeaning: similar meaning"])
    judge = CompiledJudge(
        CompiledJudgePrompt(signature_instructions=INSTRUCTIONS), gateway, reasoning=True
    )
    verdict = judge.judge(make_code("Fear"), _ucc("Anxiety"))
    assert verdict.rationale == "produce the meaning. Both fear."


def test_stub_judges() -> None:
    """Degenerate judges and the lookup table."""
    ucc = _ucc("a", "b")
    assert AlwaysSimilarJudge().judge(make_code("x"), ucc).matched_unique_index == 0
    assert not AlwaysDifferentJudge().judge(make_code("x"), ucc).is_duplicate

    table = LookupTableJudge([("b", "x"), ("a", "y")])
    assert table.judge(make_code("x"), ucc).matched_unique_index == 1
    assert table.judge(make_code("y"), ucc).matched_unique_index == 0
    assert not table.judge(make_code("z"), ucc).is_duplicate


def test_build_judge_modes(tmp_path: Path, appendix_path: Path) -> None:
    """Mode strings select judges; compiled loads the prompt file."""
    config = get_config(compiled_prompt=appendix_path)
    gateway = scripted_backend(["x"])
    assert isinstance(build_judge("zero-shot", config, gateway), ZeroShotJudge)
    assert isinstance(build_judge("stub:always-similar", config), AlwaysSimilarJudge)

    compiled = build_judge("compiled", config, gateway)
    assert isinstance(compiled, CompiledJudge)
    assert len(compiled.compiled.demos) == 30

    table = tmp_path / "pairs.json"
    table.write_bytes(orjson.dumps([["a", "b"]]))
    judge = build_judge(f"stub:table:{table}", config)
    assert judge_slug(judge) == "stub-table-pairs"

    with pytest.raises(ConfigError):
        build_judge("psychic", config, gateway)
    with pytest.raises(ConfigError):
        build_judge("zero-shot", config)


def test_appendix_prompt_loads(appendix_path: Path) -> None:
    """4 bootstrapped demos with rationales, then 26 raw demos."""
    compiled = load_compiled(appendix_path)
    assert [d.augmented for d in compiled.demos] == [True] * 4 + [False] * 26
    rationales = [d.rationale or "" for d in compiled.demos[:4]]
    assert all(r.startswith("produce the meaning.") for r in rationales)
    assert compiled.answer_prefix == "Meaning:"
