"""Run configuration: one flat dataclass, loadable from JSON with overrides.

The CLI builds a RunConfig from (optional) config file plus flags, where
flags win. Everything that changes generation behavior lives here so the
effective config can be echoed next to the shard for provenance.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

PROVIDERS = ("http", "mock")


@dataclass
class RunConfig:
    """Effective settings for a generation or pointing run."""

    query: str = ""
    category: str = "auto"
    count: int = 1
    seed: int = 0
    out_dir: str = "shard"
    workers: int = 4

    provider: str = "http"
    code_model: str = "code-model"
    instruction_model: str = "instruction-model"
    top_p: float = 0.95
    llm_attempts: int = 4
    cache_dir: str | None = None
    max_concurrency: int = 8

    stage_retries: int = 3
    num_topics: int = 10

    registry_path: str | None = None
    persona_path: str | None = None

    fixture_renderer: bool = False
    wall_timeout: float = 30.0
    max_output_bytes: int = 65536
    network_disabled: bool = True

    min_side: int = 256
    max_side: int = 4096
    max_blank_fraction: float = 0.98

    emit_styles: tuple[str, ...] = ("cot", "short_answer")

    def validate(self) -> "RunConfig":
        if self.provider not in PROVIDERS:
            raise ConfigError(f"provider must be one of {PROVIDERS}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.count < 1:
            raise ConfigError("count must be >= 1")
        if self.stage_retries < 1:
            raise ConfigError("stage_retries must be >= 1")
        if self.llm_attempts < 1:
            raise ConfigError("llm_attempts must be >= 1")
        if self.num_topics < 1:
            raise ConfigError("num_topics must be >= 1")
        if self.wall_timeout <= 0:
            raise ConfigError("wall_timeout must be positive")
        if not self.emit_styles:
            raise ConfigError("emit_styles must name at least one style")
        for path_field in ("registry_path", "persona_path"):
            value = getattr(self, path_field)
            if value is not None and not Path(value).is_file():
                raise ConfigError(f"{path_field} does not exist: {value}")
        return self

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["emit_styles"] = list(self.emit_styles)
        return data


_FIELD_NAMES = {f.name for f in dataclasses.fields(RunConfig)}


def build_config(
    config_path: str | None = None, overrides: dict | None = None
) -> RunConfig:
    """Merge defaults, a JSON config file, and explicit overrides (who win)."""
    values: dict = {}
    if config_path is not None:
        try:
            loaded = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {config_path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        values.update(loaded)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(values) - _FIELD_NAMES
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "emit_styles" in values:
        values["emit_styles"] = tuple(values["emit_styles"])
    try:
        config = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    return config.validate()
