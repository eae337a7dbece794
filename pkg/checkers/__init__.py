"""Modular checker architecture for coding and reduction QA."""

from checkers.base import BaseChecker
from checkers.code_count_checker import CodeCountChecker
from checkers.code_length_checker import CodeLengthChecker
from checkers.conservation_checker import ConservationChecker
from checkers.its_consistency_checker import REPORT_FILE, ItsConsistencyChecker

__all__ = [
    "BaseChecker",
    "CodeCountChecker",
    "CodeLengthChecker",
    "ConservationChecker",
    "ItsConsistencyChecker",
    "REPORT_FILE",
]
