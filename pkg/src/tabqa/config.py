"""Run configuration: defaults, config-file loading, flag precedence."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import FormatError
from .gateway import HashingEncoder, LmEndpointConfig, RemoteChatModel, RemoteEncoder, ScriptedChatModel


@dataclass(frozen=True)
class RunConfig:
    """Flat configuration shared by every command.

    Precedence is CLI flag over config file over these defaults. Secrets
    never live here; the endpoint env-var names point at them.
    """

    k: int = 5
    budget: int = 10_000
    baseline_k: int = 30
    n_votes: int = 10
    mode: str = "embed"
    hybrid_weight: float = 0.5
    max_steps: int = 10
    context_limit_tokens: int = 16_000
    seed: int = 0
    expansion_temperature: float = 0.0
    solver_temperature: float = 0.8
    lm_base_url: str = ""
    lm_model: str = ""
    lm_api_key_env: str = "TABQA_LM_API_KEY"
    encoder_base_url: str = ""
    encoder_model: str = ""
    encoder_api_key_env: str = "TABQA_ENCODER_API_KEY"
    encoder_dim: int = 256
    max_concurrent_requests: int = 4
    timeout_ms: int = 30_000
    retry_count: int = 3
    mock_lm_script: str | None = None
    mock_encoder: bool = False

    def __post_init__(self) -> None:
        for name in ("k", "budget", "baseline_k", "n_votes", "max_steps",
                     "context_limit_tokens", "encoder_dim", "max_concurrent_requests"):
            if getattr(self, name) < 1:
                raise FormatError(f"config field {name} must be >= 1")
        if not 0.0 <= self.hybrid_weight <= 1.0:
            raise FormatError("hybrid_weight must be in [0, 1]")
        if self.mode not in ("embed", "bm25", "hybrid"):
            raise FormatError(f"unknown mode {self.mode!r}")

    def merged(self, overrides: dict) -> "RunConfig":
        """New config with the non-None overrides applied."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **changes)


_FIELD_NAMES = {f.name for f in dataclasses.fields(RunConfig)}


def load_config(path: str | Path) -> RunConfig:
    """Load a flat JSON config file; unknown keys are rejected."""
    raw = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    unknown = set(doc) - _FIELD_NAMES
    if unknown:
        raise FormatError(f"{path}: unknown config keys {sorted(unknown)}")
    try:
        return RunConfig(**doc)
    except TypeError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def make_encoder(config: RunConfig):
    """Encoder per config: deterministic mock or remote endpoint."""
    if config.mock_encoder:
        return HashingEncoder(dim=config.encoder_dim, seed=config.seed)
    if not config.encoder_base_url:
        raise FormatError("no encoder configured: set encoder_base_url or pass --mock-encoder")
    endpoint = LmEndpointConfig(
        base_url=config.encoder_base_url,
        model_name=config.encoder_model,
        api_key_env_var=config.encoder_api_key_env,
        max_concurrent_requests=config.max_concurrent_requests,
        timeout_ms=config.timeout_ms,
        retry_count=config.retry_count,
    )
    return RemoteEncoder(endpoint, dim=config.encoder_dim)


def make_chat_model(config: RunConfig):
    """Chat model per config: scripted playback or remote endpoint."""
    if config.mock_lm_script:
        return ScriptedChatModel.from_file(config.mock_lm_script)
    if not config.lm_base_url:
        raise FormatError("no LM configured: set lm_base_url or pass --mock-lm")
    endpoint = LmEndpointConfig(
        base_url=config.lm_base_url,
        model_name=config.lm_model,
        api_key_env_var=config.lm_api_key_env,
        max_concurrent_requests=config.max_concurrent_requests,
        timeout_ms=config.timeout_ms,
        retry_count=config.retry_count,
    )
    return RemoteChatModel(endpoint)
