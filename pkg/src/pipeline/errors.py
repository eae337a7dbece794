"""Error taxonomy; every error knows the process exit code it maps to."""

from typing import Optional


class PipelineError(Exception):
    """Base class for all pipeline errors."""

    exit_code = 1


class ConfigError(PipelineError):
    """Invalid configuration or inputs."""

    exit_code = 2


class InputError(ConfigError):
    """Unusable input data (empty transcript, bad corpus)."""


class ProviderError(PipelineError):
    """LLM or embedding provider failure."""

    exit_code = 3


class TransportError(ProviderError):
    """Network or rate-limit failure that survived all retries."""


class AuthenticationError(ProviderError):
    """Provider rejected the credentials."""


class ProviderContentError(ProviderError):
    """Provider reported a request/content error or sent a malformed payload."""


class ScriptUnderrunError(ProviderError):
    """Scripted backend has no answer left for a prompt."""


class EmbeddingError(ProviderError):
    """Embedding batch is unusable (dimension mismatch, non-finite values)."""


class CodingParseError(ProviderError):
    """Initial-coding answer could not be turned into a code set."""

    def __init__(self, message: str, raw: str = "") -> None:
        super().__init__(message)
        self.raw = raw


class JudgeContractError(PipelineError):
    """A duplicate judge answered outside its contract."""

    exit_code = 4


class JudgeParseError(JudgeContractError):
    """Judge answer lacks a recognizable verdict."""

    def __init__(self, message: str, raw: str = "") -> None:
        super().__init__(message)
        self.raw = raw


class ReductionAborted(JudgeContractError):
    """Reduction stopped at a (position, code index) frontier."""

    def __init__(
        self, message: str, position: int, code_index: int, cause: Optional[Exception] = None
    ) -> None:
        super().__init__(message)
        self.position = position
        self.code_index = code_index
        self.cause = cause
        if isinstance(cause, ProviderError):
            self.exit_code = cause.exit_code


class StructuralError(PipelineError):
    """Codebook invariant violated."""


class DigestMismatchError(PipelineError):
    """Checkpoint does not belong to the given code sets."""


class MetricError(PipelineError, ValueError):
    """Metric precondition not met."""


class CompileError(PipelineError):
    """Example bank or compilation input is invalid."""
