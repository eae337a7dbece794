"""Base checker interface."""

from abc import ABC, abstractmethod
from typing import Generic, TypeVar

from src.schemas.models import Finding

T = TypeVar("T")


class BaseChecker(ABC, Generic[T]):
    """Base class for all checkers."""

    @abstractmethod
    def check(self, subject: T) -> list[Finding]:
        """Run checks and return findings."""
        pass

    @property
    @abstractmethod
    def name(self) -> str:
        """Checker name."""
        pass
