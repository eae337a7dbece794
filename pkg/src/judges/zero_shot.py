"""Zero-shot list judge: one prompt comparing a code to the whole unique list."""

import logging

from src.codebook.cumulative import code_text
from src.judges.base import BaseJudge
from src.llm.gateway import BaseGateway
from src.llm.parsing import first_json_object, normalize_key
from src.llm.prompts import DUPLICATE_KEY, render_duplicate_prompt
from src.pipeline.errors import JudgeParseError, StructuralError
from src.schemas.models import InitialCode, JudgeVerdict, UniqueCumulativeCodebook

logger = logging.getLogger(__name__)

TRUE_VALUES = {"true"}
FALSE_VALUES = {"false"}


def parse_list_verdict(raw: str) -> bool:
    """Read value_in_combined_unique as a boolean; anything else breaks the contract."""
    payload = first_json_object(raw)
    if payload is None:
        raise JudgeParseError("Zero-shot answer holds no JSON object", raw)

    for key, value in payload.items():
        if normalize_key(key) != DUPLICATE_KEY:
            continue
        if isinstance(value, bool):
            return value
        if isinstance(value, str):
            text = value.strip().strip("'\"").lower()
            if text in TRUE_VALUES:
                return True
            if text in FALSE_VALUES:
                return False
        raise JudgeParseError(f"Unrecognized truth value {value!r} for {DUPLICATE_KEY}", raw)

    raise JudgeParseError(f"Zero-shot answer lacks the key {DUPLICATE_KEY}", raw)


class ZeroShotJudge(BaseJudge):
    """Exactly one gateway call per candidate; the matched entry stays unknown."""

    def __init__(self, gateway: BaseGateway) -> None:
        self.gateway = gateway

    @property
    def name(self) -> str:
        """Judge name."""
        return "zero-shot"

    def judge(self, code: InitialCode, ucc: UniqueCumulativeCodebook) -> JudgeVerdict:
        """Ask whether the code resembles any entry of the current UCC."""
        if not ucc.entries:
            raise StructuralError("zero-shot judge needs a non-empty UCC")
        prompt = render_duplicate_prompt(code_text(code), [code_text(e.code) for e in ucc.entries])
        response = self.gateway.ask(prompt)
        is_duplicate = parse_list_verdict(response.text)
        return JudgeVerdict(is_duplicate=is_duplicate, raw_response=response.text, calls=1)
