"""Lenient extraction of JSON payloads from model answers."""

import json
import re
from typing import Any, Optional

_FENCE_RE = re.compile(r"```(?:json|JSON)?")


def strip_fences(text: str) -> str:
    """Remove markdown code fences, keeping their content."""
    return _FENCE_RE.sub("", text)


def first_json_object(text: str) -> Optional[dict[str, Any]]:
    """First decodable JSON object in the text (leading prose and fences allowed)."""
    text = strip_fences(text)
    decoder = json.JSONDecoder()
    for match in re.finditer(r"\{", text):
        try:
            obj, _ = decoder.raw_decode(text, match.start())
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    return None


def normalize_key(key: str) -> str:
    """Lowercase, with spaces and dashes folded to underscores."""
    return re.sub(r"[\s\-]+", "_", key.strip().lower())
