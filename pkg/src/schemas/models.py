"""Pydantic models for codes, codebooks, judges, compiled prompts and reports."""

from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


class Meaning(str, Enum):
    """Duplicate-judge label for a pair of code texts."""

    SIMILAR = "similar"
    DIFFERENT = "different"

    @property
    def phrase(self) -> str:
        """Full answer phrase as written in prompts and example banks."""
        return f"the two texts have a {self.value} meaning"


class BackendTag(str, Enum):
    """Which gateway backend produced a completion."""

    LIVE = "live"
    SCRIPTED = "scripted"


class Severity(str, Enum):
    """Checker finding severity."""

    ERROR = "error"
    WARNING = "warning"
    INFO = "info"


# ---------------------------------------------------------------------------
# Codebook model
# ---------------------------------------------------------------------------


class InitialCode(BaseModel):
    """One initial code produced for an interview."""

    name: str = Field(..., description="Short code label (target <= 5 words)")
    description: str = Field(..., description="Code description (target ~30 words)")
    quote: str = Field("", description="Participant quote (target <= 40 words)")

    @field_validator("name", "description")
    @classmethod
    def validate_not_blank(cls, v: str) -> str:
        """Name and description must carry text."""
        if not v.strip():
            raise ValueError("must be non-empty after trimming")
        return v


class InterviewCodeSet(BaseModel):
    """Initial codes of one interview at its position in the analysis sequence."""

    interview_id: str = Field(..., description="Stable corpus identifier")
    position: int = Field(..., ge=1, description="1-based ordinal within the analysis sequence")
    codes: list[InitialCode] = Field(..., min_length=1, description="Codes in answer order")


class CodebookEntry(BaseModel):
    """A code together with the interview it came from."""

    code: InitialCode
    interview_id: str
    position: int = Field(..., ge=1)


class TotalCumulativeCodebook(BaseModel):
    """Every code of the run, duplicates included, in analysis order."""

    entries: list[CodebookEntry] = Field(default_factory=list)
    cumulative_total_at: list[int] = Field(
        default_factory=list, description="Running count after each position (index 0 = position 1)"
    )


class DuplicateRecord(BaseModel):
    """A code rejected as a duplicate of a surviving unique code."""

    duplicate: InitialCode
    interview_id: str = ""
    position: int = Field(..., ge=1, description="Source position of the duplicate")
    matched_unique_index: Optional[int] = Field(
        None, ge=0, description="UCC index at match time (absent for list judges)"
    )
    rationale: Optional[str] = None


class UniqueCumulativeCodebook(BaseModel):
    """Append-only codebook of unique codes plus the duplicate log."""

    entries: list[CodebookEntry] = Field(default_factory=list)
    duplicates: list[DuplicateRecord] = Field(default_factory=list)
    cumulative_unique_at: list[int] = Field(default_factory=list)


class PositionCount(BaseModel):
    """Cumulative counts after one interview position."""

    position: int = Field(..., ge=1)
    cumulative_total: int = Field(..., ge=0)
    cumulative_unique: int = Field(..., ge=0)


# ---------------------------------------------------------------------------
# LLM gateway
# ---------------------------------------------------------------------------


class CompletionRequest(BaseModel):
    """Single-message chat completion request."""

    model_id: str = Field(..., description="Provider model identifier")
    prompt: str = Field(..., description="Whole prompt, sent as one user message")
    temperature: float = Field(0.0, ge=0.0)
    max_output_tokens: int = Field(4096, gt=0)
    seed_hint: Optional[int] = None


class TokenUsage(BaseModel):
    """Provider-reported token counts."""

    prompt_tokens: Optional[int] = None
    completion_tokens: Optional[int] = None
    total_tokens: Optional[int] = None


class CompletionResponse(BaseModel):
    """Raw completion text; text may be empty but is always present."""

    text: str
    usage: Optional[TokenUsage] = None
    backend_tag: BackendTag


# ---------------------------------------------------------------------------
# Initial coding
# ---------------------------------------------------------------------------


class AnalysisSequence(BaseModel):
    """Named order in which interviews are analysed."""

    name: str
    order: list[int] = Field(..., min_length=1, description="Permutation of 1..n")

    @field_validator("order")
    @classmethod
    def validate_permutation(cls, v: list[int]) -> list[int]:
        """Order must be a permutation of 1..n."""
        if sorted(v) != list(range(1, len(v) + 1)):
            raise ValueError(f"order is not a permutation of 1..{len(v)}: {v}")
        return v


class Transcript(BaseModel):
    """One interview transcript of the corpus."""

    interview_id: str
    text: str
    path: Optional[str] = None


# ---------------------------------------------------------------------------
# Duplicate judges
# ---------------------------------------------------------------------------


class JudgeVerdict(BaseModel):
    """Answer to "is this code a duplicate of anything in the UCC?"."""

    is_duplicate: bool
    matched_unique_index: Optional[int] = Field(None, ge=0)
    rationale: Optional[str] = None
    raw_response: str = ""
    calls: int = Field(0, ge=0, description="Pair comparisons spent (gateway calls for LLM judges)")


# ---------------------------------------------------------------------------
# Judge compiler
# ---------------------------------------------------------------------------


class MeaningExample(BaseModel):
    """Labeled pair of "Name. Description" texts."""

    text_1: str
    text_2: str
    meaning: Meaning
    rationale: Optional[str] = None
    augmented: bool = False

    @field_validator("meaning", mode="before")
    @classmethod
    def parse_meaning_label(cls, v: Any) -> Any:
        """Accept the bare label or the full answer phrase."""
        if isinstance(v, str):
            text = v.strip().lower()
            for label in Meaning:
                if text in (label.value, label.phrase):
                    return label
        return v

    @model_validator(mode="after")
    def validate_rationale(self) -> "MeaningExample":
        """A rationale only comes from bootstrapping."""
        if self.rationale is not None and not self.augmented:
            raise ValueError("rationale present on a non-augmented example")
        return self


class ExampleBank(BaseModel):
    """Labeled example bank used to compile the pairwise judge."""

    examples: list[MeaningExample] = Field(..., min_length=1)

    @property
    def counts(self) -> dict[str, int]:
        """Example count per label."""
        counts = {label.value: 0 for label in Meaning}
        for example in self.examples:
            counts[example.meaning.value] += 1
        return counts


class CompileParams(BaseModel):
    """Random-search parameters for judge compilation."""

    max_bootstrapped: int = Field(4, ge=0)
    max_raw: int = Field(16, ge=0)
    num_candidates: int = Field(8, ge=1)
    val_fraction: float = Field(0.25, gt=0.0, lt=1.0)
    seed: int = 0


class CompileMetadata(BaseModel):
    """Provenance of a compiled judge prompt."""

    teacher_model_id: Optional[str] = None
    num_candidates: int = 0
    candidate_scores: list[float] = Field(default_factory=list)
    selected_candidate: int = 0
    params: Optional[CompileParams] = None
    validation_set: list[MeaningExample] = Field(default_factory=list)
    test_accuracy: Optional[float] = Field(None, ge=0.0, le=1.0)


class CompiledJudgePrompt(BaseModel):
    """Serialized few-shot program for the pairwise judge."""

    signature_instructions: str
    answer_prefix: str = "Meaning:"
    demos: list[MeaningExample] = Field(default_factory=list)
    validation_score: Optional[float] = Field(None, ge=0.0, le=1.0)
    compile_seed: Optional[int] = None
    metadata: CompileMetadata = Field(default_factory=CompileMetadata)


class EvaluationResult(BaseModel):
    """Accuracy of a compiled prompt on a labeled set."""

    accuracy: float = Field(..., ge=0.0, le=1.0)
    passed: int = Field(..., ge=0)
    total: int = Field(..., ge=1)
    parse_failures: int = Field(0, ge=0)


# ---------------------------------------------------------------------------
# Reduction
# ---------------------------------------------------------------------------


class ReductionResult(BaseModel):
    """Completed cumulative reduction."""

    tcc: TotalCumulativeCodebook
    ucc: UniqueCumulativeCodebook
    counts: list[PositionCount]


class ReductionFrontier(BaseModel):
    """Checkpoint persisted after every completed interview position."""

    code_sets_digest: str
    judge_name: str
    next_set_index: int = Field(..., ge=0, description="Index into code_sets still to process")
    ucc: UniqueCumulativeCodebook
    counts: list[PositionCount] = Field(default_factory=list)
    complete: bool = False


# ---------------------------------------------------------------------------
# Saturation metrics
# ---------------------------------------------------------------------------


class LinearFit(BaseModel):
    """Ordinary least squares line y = slope * x + intercept."""

    slope: float
    intercept: float
    n_points: int = Field(..., ge=2)

    def predict(self, x: float) -> float:
        """Fitted value at x."""
        return self.slope * x + self.intercept


class SaturationReport(BaseModel):
    """Saturation figures of one reduced run."""

    run_id: str
    sequence_name: str
    iteration: int = Field(1, ge=1)
    judge: str = ""
    counts: list[PositionCount]
    total_codes: int = Field(..., ge=1)
    unique_codes: int = Field(..., ge=1)
    its: float = Field(..., ge=0.0, le=1.0)
    its_display: str = Field(..., description="ITS rounded to 2 decimals")
    slope_ratio: Optional[float] = None
    fit_total: Optional[LinearFit] = Field(None, description="Absent for single-position runs")
    fit_unique: Optional[LinearFit] = None


class StabilitySummary(BaseModel):
    """ITS stability across runs."""

    its_values: list[float] = Field(..., min_length=2)
    mean: float
    sd: float = Field(..., ge=0.0, description="Sample (n-1) standard deviation")
    cov_percent: float = Field(..., ge=0.0)
    range: float = Field(..., ge=0.0, description="Max - min over 2-decimal values")


# ---------------------------------------------------------------------------
# Similarity evaluation
# ---------------------------------------------------------------------------


class Assignment(BaseModel):
    """Trace-maximizing one-to-one matching between rows and columns."""

    pairs: list[tuple[int, int]] = Field(default_factory=list, description="(row, col) matches")
    score: float = 0.0
    row_order: list[int] = Field(default_factory=list)
    col_order: list[int] = Field(default_factory=list)


class SimilarityMatrix(BaseModel):
    """Pairwise cosine similarities between two codebooks."""

    row_labels: list[str]
    col_labels: list[str]
    values: list[list[float]]
    ordering: Optional[Assignment] = None

    @model_validator(mode="after")
    def validate_shape(self) -> "SimilarityMatrix":
        """Values must be |rows| x |cols| cosines."""
        if len(self.values) != len(self.row_labels):
            raise ValueError("row count does not match row labels")
        for row in self.values:
            if len(row) != len(self.col_labels):
                raise ValueError("column count does not match column labels")
            for v in row:
                if not -1.0 - 1e-9 <= v <= 1.0 + 1e-9:
                    raise ValueError(f"similarity {v} outside [-1, 1]")
        return self


# ---------------------------------------------------------------------------
# Checkers and run bookkeeping
# ---------------------------------------------------------------------------


class Finding(BaseModel):
    """Checker finding."""

    checker: str = Field(..., description="Checker name")
    position: Optional[int] = Field(None, ge=1, description="Interview position if applicable")
    code_name: Optional[str] = Field(None, description="Code name if applicable")
    reason: str = Field(..., description="Finding reason")
    severity: Severity = Field(..., description="Severity level")
    suggestion: Optional[str] = Field(None, description="Suggestion for fixing")


class RunManifest(BaseModel):
    """Record of one initial-coding cell."""

    sequence: AnalysisSequence
    iteration: int = Field(..., ge=1)
    model_id: str
    backend: BackendTag
    temperature: float
    max_codes: int
    interviews: list[str] = Field(default_factory=list, description="interview_id by position")
    code_counts: list[int] = Field(default_factory=list)
    started_at: str
    finished_at: Optional[str] = None
    status: str = "running"
    findings: list[Finding] = Field(default_factory=list)
