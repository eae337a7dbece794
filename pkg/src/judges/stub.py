"""Network-free judges with fixed behavior, used for limits and oracle tests."""

from collections.abc import Iterable
from pathlib import Path

import orjson

from src.judges.base import BaseJudge
from src.pipeline.errors import ConfigError
from src.schemas.models import InitialCode, JudgeVerdict, UniqueCumulativeCodebook


class AlwaysSimilarJudge(BaseJudge):
    """Every candidate duplicates the oldest unique code."""

    @property
    def name(self) -> str:
        return "stub-always-similar"

    def judge(self, code: InitialCode, ucc: UniqueCumulativeCodebook) -> JudgeVerdict:
        return JudgeVerdict(is_duplicate=True, matched_unique_index=0, calls=1)


class AlwaysDifferentJudge(BaseJudge):
    """No candidate is ever a duplicate."""

    @property
    def name(self) -> str:
        return "stub-always-different"

    def judge(self, code: InitialCode, ucc: UniqueCumulativeCodebook) -> JudgeVerdict:
        return JudgeVerdict(is_duplicate=False, calls=len(ucc.entries))


class LookupTableJudge(BaseJudge):
    """Similar iff (unique name, candidate name) is in the table; oldest match wins."""

    def __init__(self, pairs: Iterable[tuple[str, str]], label: str = "table") -> None:
        self.pairs = {(a, b) for a, b in pairs}
        self.label = label

    @property
    def name(self) -> str:
        return f"stub-{self.label}"

    def judge(self, code: InitialCode, ucc: UniqueCumulativeCodebook) -> JudgeVerdict:
        for index, entry in enumerate(ucc.entries):
            if (entry.code.name, code.name) in self.pairs:
                return JudgeVerdict(is_duplicate=True, matched_unique_index=index, calls=index + 1)
        return JudgeVerdict(is_duplicate=False, calls=len(ucc.entries))

    @classmethod
    def from_file(cls, path: Path) -> "LookupTableJudge":
        """Load a JSON list of [unique_name, candidate_name] pairs."""
        if not path.exists():
            raise ConfigError(f"Lookup table not found: {path}")
        data = orjson.loads(path.read_bytes())
        if not isinstance(data, list) or not all(isinstance(p, list) and len(p) == 2 for p in data):
            raise ConfigError(f"{path} must hold a list of [unique_name, candidate_name] pairs")
        return cls(((str(a), str(b)) for a, b in data), label=f"table-{path.stem}")
