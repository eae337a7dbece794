"""Prompt templates for initial coding and zero-shot duplicate judging."""

CODING_TEMPLATE = (
    "Can you assist me in the generation of initial codes to assist me with my thematic analysis. "
    "Identify the {max_codes} most relevant initial codes in the text, provide a meaningful name "
    "for each code in no more than 5 words, 30 words simple description of the code, and a max 40 "
    "words quote from the participant. "
    "Format the response as a json file keeping names, descriptions and quotes together in the "
    "json, and keep them together in 'Codes'.\n"
    "\n"
    "```{text}```\n"
)

DUPLICATE_TEMPLATE = (
    "Then, determine if value: ```{value}``` conveys a resembling idea or meaning to any element "
    "in the list combined_unique: {combined_unique}.\n"
    "Your response should be either a string 'true' (Similar idea or meaning) or a string 'false' "
    "(no similarity).\n"
    "Format the response as a json file using the key value_in_combined_unique\n"
)

DUPLICATE_KEY = "value_in_combined_unique"
LIST_SEPARATOR = ", "


def render_coding_prompt(text: str, max_codes: int) -> str:
    """Interpolate the transcript verbatim; str.format leaves braces in the transcript alone."""
    return CODING_TEMPLATE.format(max_codes=max_codes, text=text)


def render_duplicate_prompt(value: str, combined_unique: list[str]) -> str:
    """Ask whether one code text resembles any entry of the unique list."""
    joined = LIST_SEPARATOR.join(combined_unique)
    return DUPLICATE_TEMPLATE.format(value=value, combined_unique=joined)
