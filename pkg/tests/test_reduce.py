"""Tests for the cumulative reduction, its checkpoint and resume."""

import random
import re
from pathlib import Path

import pytest

from src.judges.base import BaseJudge
from src.judges.compiled import CompiledJudge
from src.judges.stub import AlwaysDifferentJudge, AlwaysSimilarJudge, LookupTableJudge
from src.judges.zero_shot import ZeroShotJudge
from src.llm.gateway import BaseGateway, scripted_backend
from src.pipeline.errors import DigestMismatchError, ReductionAborted
from src.pipeline.step_20_reduce import (
    EXACT_MATCH_RATIONALE,
    code_sets_digest,
    read_frontier,
    reduce,
    resume,
)
from src.schemas.models import (
    BackendTag,
    CompiledJudgePrompt,
    CompletionRequest,
    CompletionResponse,
    InitialCode,
    InterviewCodeSet,
    JudgeVerdict,
    Meaning,
    PositionCount,
    UniqueCumulativeCodebook,
)
from tests.conftest import (
    E2E_COUNTS,
    E2E_NEW_PER_INTERVIEW,
    e2e_judge_answers,
    make_code,
    make_sets,
    verdict,
)


def _counts(*pairs: tuple[int, int]) -> list[PositionCount]:
    return [
        PositionCount(position=p, cumulative_total=t, cumulative_unique=u)
        for p, (t, u) in enumerate(pairs, start=1)
    ]


def _e2e_sets() -> list[InterviewCodeSet]:
    return make_sets(
        *[[f"Theme {k}-{j}" for j in range(1, n + 1)] for k, n in enumerate(E2E_COUNTS, start=1)]
    )


def _fold(
    code_sets: list[InterviewCodeSet], pairs: set[tuple[str, str]]
) -> tuple[list[str], list[int]]:
    """Direct fold: seed with set one, then scan the current uniques for every later code."""
    uniques = [c.name for c in code_sets[0].codes]
    per_position = [len(uniques)]
    for code_set in code_sets[1:]:
        for code in code_set.codes:
            if code.name in uniques:
                continue
            if any((u, code.name) in pairs for u in uniques):
                continue
            uniques.append(code.name)
        per_position.append(len(uniques))
    return uniques, per_position


class _ExplodingJudge(BaseJudge):
    @property
    def name(self) -> str:
        return "exploding"

    def judge(self, code: InitialCode, ucc: UniqueCumulativeCodebook) -> JudgeVerdict:
        raise AssertionError("judge must not be called")


class _CountingJudge(AlwaysDifferentJudge):
    def __init__(self) -> None:
        self.comparisons = 0

    def judge(self, code: InitialCode, ucc: UniqueCumulativeCodebook) -> JudgeVerdict:
        self.comparisons += len(ucc.entries)
        return super().judge(code, ucc)


class _PairTableGateway(BaseGateway):
    """Answers pair prompts from a (unique name, candidate name) table."""

    backend_tag = BackendTag.SCRIPTED
    _QUERY = re.compile(r"Text 1: (.*?)\. .*?\n\nText 2: (.*?)\. .*?\n\nMeaning:$", re.DOTALL)

    def __init__(self, pairs: set[tuple[str, str]]) -> None:
        super().__init__("pair-table")
        self.pairs = pairs

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        match = self._QUERY.search(request.prompt.split("\n\n---\n\n")[-1])
        assert match is not None
        similar = (match.group(1), match.group(2)) in self.pairs
        meaning = Meaning.SIMILAR if similar else Meaning.DIFFERENT
        return CompletionResponse(text=meaning.phrase, backend_tag=self.backend_tag)


def test_always_different_keeps_everything() -> None:
    """No-dedup limit."""
    result = reduce(make_sets(["a", "b", "c"], ["d", "e"], ["f", "g"]), AlwaysDifferentJudge())
    assert len(result.ucc.entries) == 7
    assert result.ucc.duplicates == []
    assert result.counts == _counts((3, 3), (5, 5), (7, 7))


def test_always_similar_keeps_the_seed_only() -> None:
    """Full-dedup limit: the first set is never judged."""
    result = reduce(make_sets(["a", "b", "c"], ["d", "e"], ["f", "g"]), AlwaysSimilarJudge())
    assert [e.code.name for e in result.ucc.entries] == ["a", "b", "c"]
    assert len(result.ucc.duplicates) == 4
    assert result.counts == _counts((3, 3), (5, 3), (7, 3))


def test_seed_set_is_not_deduplicated() -> None:
    """Repeated codes inside the first set all survive."""
    result = reduce(make_sets(["a", "a"], ["a"]), AlwaysDifferentJudge())
    assert len(result.ucc.entries) == 2
    assert result.ucc.duplicates[0].matched_unique_index == 0
    assert result.ucc.duplicates[0].rationale == EXACT_MATCH_RATIONALE


def test_exact_match_skips_the_judge() -> None:
    """Normalized name+description matches never reach the judge."""
    sets = [
        InterviewCodeSet(interview_id="i1", position=1, codes=[make_code("Fear", "Worry.")]),
        InterviewCodeSet(interview_id="i2", position=2, codes=[make_code("FEAR ", " worry.")]),
    ]
    result = reduce(sets, _ExplodingJudge())
    assert result.counts[-1].cumulative_unique == 1


def test_later_codes_see_same_interview_additions() -> None:
    """A code is judged against uniques appended earlier in its own set."""
    judge = LookupTableJudge([("x", "y")])
    result = reduce(make_sets(["a"], ["x", "y"]), judge)
    assert [e.code.name for e in result.ucc.entries] == ["a", "x"]
    assert result.ucc.duplicates[0].matched_unique_index == 1


def test_reduce_matches_direct_fold_on_random_instances() -> None:
    """Seeded random lookup-table judges over small instances agree with the fold."""
    rng = random.Random(20240611)
    pool = [f"c{i}" for i in range(10)]
    for _ in range(200):
        sets = make_sets(
            *[
                [rng.choice(pool) for _ in range(rng.randint(1, 6))]
                for _ in range(rng.randint(1, 8))
            ]
        )
        pairs = {(a, b) for a in pool for b in pool if a != b and rng.random() < 0.15}

        result = reduce(sets, LookupTableJudge(pairs))
        uniques, per_position = _fold(sets, pairs)

        assert [e.code.name for e in result.ucc.entries] == uniques
        assert [c.cumulative_unique for c in result.counts] == per_position
        assert len(result.ucc.entries) + len(result.ucc.duplicates) == len(result.tcc.entries)
        uniques_at = [c.cumulative_unique for c in result.counts]
        assert uniques_at == sorted(uniques_at)
        assert all(c.cumulative_unique <= c.cumulative_total for c in result.counts)


def test_worst_case_comparisons_bounded() -> None:
    """Always-different: sum of UCC sizes seen stays below uniques times total."""
    judge = _CountingJudge()
    result = reduce(make_sets(["a", "b"], ["c", "d", "e"], ["f"]), judge)
    assert judge.comparisons == 2 + 3 + 4 + 5
    assert judge.comparisons <= len(result.ucc.entries) * len(result.tcc.entries)


def test_lookup_table_over_replay_corpus() -> None:
    """12 sets and 175 codes, five new codes per later interview: 70 uniques."""
    sets = _e2e_sets()
    pairs = {
        ("Theme 1-1", f"Theme {k}-{j}")
        for k, n in enumerate(E2E_COUNTS, start=1)
        for j in range(E2E_NEW_PER_INTERVIEW + 1, n + 1)
        if k > 1
    }
    result = reduce(sets, LookupTableJudge(pairs))
    assert result.counts[-1] == PositionCount(
        position=12, cumulative_total=175, cumulative_unique=70
    )


def test_pairwise_and_table_judges_agree() -> None:
    """A compiled judge answering from a pair table reduces like the table judge."""
    rng = random.Random(7)
    pool = [f"Code {i}" for i in range(8)]
    sets = make_sets(*[[rng.choice(pool) for _ in range(4)] for _ in range(5)])
    pairs = {(a, b) for a in pool for b in pool if a != b and rng.random() < 0.2}

    compiled = CompiledJudge(
        CompiledJudgePrompt(signature_instructions="Judge."), _PairTableGateway(pairs)
    )
    by_prompt = reduce(sets, compiled)
    by_table = reduce(sets, LookupTableJudge(pairs))

    assert by_prompt.ucc.entries == by_table.ucc.entries
    assert by_prompt.counts == by_table.counts


def test_zero_shot_replay_corpus() -> None:
    """Zero-shot judge under the scripted answers: 70 of 175."""
    gateway = scripted_backend(e2e_judge_answers())
    result = reduce(_e2e_sets(), ZeroShotJudge(gateway))
    assert len(result.ucc.entries) == 70
    assert gateway.remaining == 0
    assert len(gateway.history) == sum(E2E_COUNTS[1:])


def test_zero_shot_and_compiled_judges_reduce_alike() -> None:
    """Same duplicate decisions through the list prompt and the pair prompt give one UCC."""
    sets = _e2e_sets()
    pairs = {
        ("Theme 1-1", f"Theme {k}-{j}")
        for k, n in enumerate(E2E_COUNTS, start=1)
        for j in range(E2E_NEW_PER_INTERVIEW + 1, n + 1)
        if k > 1
    }
    compiled = CompiledJudge(
        CompiledJudgePrompt(signature_instructions="Judge."), _PairTableGateway(pairs)
    )

    by_list = reduce(sets, ZeroShotJudge(scripted_backend(e2e_judge_answers())))
    by_pair = reduce(sets, compiled)

    assert by_list.ucc.entries == by_pair.ucc.entries
    assert by_list.counts == by_pair.counts
    assert [d.duplicate for d in by_list.ucc.duplicates] == [
        d.duplicate for d in by_pair.ucc.duplicates
    ]
    assert {d.matched_unique_index for d in by_pair.ucc.duplicates} == {0}


def test_abort_then_resume_equals_uninterrupted(tmp_path: Path) -> None:
    """A malformed verdict at position 7 aborts; resuming finishes identically."""
    sets = _e2e_sets()
    answers = e2e_judge_answers()
    offset = sum(E2E_COUNTS[1:6])
    broken = answers[:offset] + ['{"verdict": "yes"}']
    checkpoint = tmp_path / "frontier.json"

    with pytest.raises(ReductionAborted) as exc:
        reduce(sets, ZeroShotJudge(scripted_backend(broken)), checkpoint)
    assert (exc.value.position, exc.value.code_index) == (7, 0)
    assert exc.value.exit_code == 4

    frontier = read_frontier(checkpoint)
    assert frontier.next_set_index == 6
    assert not frontier.complete

    resumed = resume(frontier, sets, ZeroShotJudge(scripted_backend(answers[offset:])), checkpoint)
    golden = reduce(sets, ZeroShotJudge(scripted_backend(answers)))

    assert resumed.ucc == golden.ucc
    assert resumed.counts == golden.counts
    assert read_frontier(checkpoint).complete


def test_provider_failure_keeps_provider_exit_code() -> None:
    """Running out of scripted answers aborts with the provider exit code."""
    sets = make_sets(["a"], ["b", "c"])
    with pytest.raises(ReductionAborted) as exc:
        reduce(sets, ZeroShotJudge(scripted_backend([verdict("false")])))
    assert (exc.value.position, exc.value.code_index) == (2, 1)
    assert exc.value.exit_code == 3


def test_resume_rejects_other_code_sets(tmp_path: Path) -> None:
    """The checkpoint is bound to the digest of its code sets."""
    sets = make_sets(["a"], ["b"])
    checkpoint = tmp_path / "frontier.json"
    reduce(sets, AlwaysDifferentJudge(), checkpoint)
    altered = make_sets(["a"], ["c"])

    assert code_sets_digest(sets) != code_sets_digest(altered)
    with pytest.raises(DigestMismatchError):
        resume(read_frontier(checkpoint), altered, AlwaysDifferentJudge())


def test_resume_complete_frontier_is_noop(tmp_path: Path) -> None:
    """Nothing left to do: the judge is not consulted."""
    sets = make_sets(["a", "b"], ["c"], ["d"])
    checkpoint = tmp_path / "frontier.json"
    done = reduce(sets, AlwaysDifferentJudge(), checkpoint)

    again = resume(read_frontier(checkpoint), sets, _ExplodingJudge())
    assert again.ucc == done.ucc
    assert again.counts == done.counts
