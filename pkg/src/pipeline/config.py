"""Configuration management using pydantic-settings."""

import os
import re
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict, TomlConfigSettingsSource

from src.pipeline.errors import ConfigError

_UNSET_VAR = re.compile(r"\$\{[^}]*\}")


class RunConfig(BaseSettings):
    """Experiment settings."""

    model_config = SettingsConfigDict(
        env_prefix="ITS_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Corpus and output layout
    corpus: Optional[Path] = None  # Directory of .txt transcripts or manifest CSV
    out_dir: Path = Path("./out")
    max_transcript_chars: int = Field(200_000, gt=0)

    # Gateway
    backend: Literal["live", "scripted"] = "live"
    script_path: Optional[Path] = None  # Scripted backend answers (JSON)
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model_id: Optional[str] = None  # No default model; must be configured
    api_key_env: str = "ITS_API_KEY"
    temperature: float = Field(0.0, ge=0.0)
    max_output_tokens: int = Field(4096, gt=0)
    request_timeout_s: float = Field(120.0, gt=0)
    max_retries: int = Field(3, ge=1)  # Attempts, not re-tries
    backoff_base_s: float = Field(1.0, ge=0.0)
    max_concurrency: int = Field(4, ge=1)

    # Initial coding
    max_codes: int = Field(15, ge=1)

    # Reduction
    judge: str = "zero-shot"  # zero-shot | compiled | stub:<name>
    compiled_prompt: Optional[Path] = None
    judge_reasoning: bool = False

    # Experiment matrix
    sequences: list[str] = Field(default_factory=lambda: ["identity"])
    custom_sequences: dict[str, list[int]] = Field(default_factory=dict)
    iterations: int = Field(1, ge=1)
    seed: int = 0
    cell_workers: int = Field(1, ge=1)
    force: bool = False

    # Judge compilation
    bank: Optional[Path] = None
    train_fraction: float = Field(0.8, gt=0.0, lt=1.0)
    max_bootstrapped: int = Field(4, ge=0)
    max_raw: int = Field(16, ge=0)
    num_candidates: int = Field(8, ge=1)
    val_fraction: float = Field(0.25, gt=0.0, lt=1.0)
    teacher_model_id: Optional[str] = None

    # Similarity evaluation
    embedding_provider: Literal["hash", "file", "http"] = "hash"
    embedding_endpoint: str = "https://api.openai.com/v1/embeddings"
    embedding_model_id: str = "sentence-transformers/all-MiniLM-L6-v2"
    embedding_vectors_path: Optional[Path] = None
    embedding_dim: int = Field(384, gt=0)
    embedding_batch_size: int = Field(64, gt=0)
    highlight_threshold: float = Field(0.75, ge=-1.0, le=1.0)

    # Logging
    log_level: str = "INFO"
    log_format: Literal["json", "text"] = "text"

    @field_validator("custom_sequences")
    @classmethod
    def validate_custom_sequences(cls, v: dict[str, list[int]]) -> dict[str, list[int]]:
        """Custom orders must be permutations of 1..n."""
        for name, order in v.items():
            if sorted(order) != list(range(1, len(order) + 1)):
                raise ValueError(
                    f"custom sequence '{name}' is not a permutation of 1..{len(order)}"
                )
        return v

    def api_key(self) -> str:
        """Read the API key from the configured environment variable."""
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise ConfigError(f"Environment variable {self.api_key_env} is not set")
        return key


def _interpolate_env(value: Any) -> Any:
    """Expand ${VAR} references in every string of a config mapping."""
    if isinstance(value, str):
        expanded = os.path.expandvars(value)
        if _UNSET_VAR.search(expanded):
            raise ConfigError(f"Unset environment variable in config value: {value}")
        return expanded
    if isinstance(value, dict):
        return {k: _interpolate_env(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_interpolate_env(v) for v in value]
    return value


def get_config(config_path: Optional[Path] = None, **overrides: Any) -> RunConfig:
    """Load settings: CLI overrides > TOML file > environment > defaults."""
    data: dict[str, Any] = {}
    if config_path is not None:
        if not config_path.exists():
            raise ConfigError(f"Config file not found: {config_path}")
        data = _interpolate_env(TomlConfigSettingsSource(RunConfig, toml_file=config_path)())
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**data)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e
