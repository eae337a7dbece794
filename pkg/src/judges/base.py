"""Duplicate judge interface."""

from abc import ABC, abstractmethod

from src.schemas.models import InitialCode, JudgeVerdict, UniqueCumulativeCodebook


class BaseJudge(ABC):
    """Answers "is this code a duplicate of anything in the UCC?"."""

    @property
    @abstractmethod
    def name(self) -> str:
        """Judge name, also used to slug output directories."""
        pass

    @abstractmethod
    def judge(self, code: InitialCode, ucc: UniqueCumulativeCodebook) -> JudgeVerdict:
        """Verdict for one candidate against the current UCC."""
        pass
