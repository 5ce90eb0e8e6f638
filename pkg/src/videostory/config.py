"""Engine configuration: defaults, INI config files, env vars, CLI overrides.

Precedence, lowest to highest: built-in defaults, config file, ``VIDEOSTORY_*``
environment variables (mirroring the CLI flag names), explicit CLI flags.
Unknown sections or keys in a config file are hard errors; silent typos in
batch configs are worse than a refusal to start.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .agents import AgentConfig, HttpAgents, StubAgents, default_endpoints, load_categories_file
from .agents.base import Agents
from .agents.types import DEFAULT_BASE_URL
from .errors import ParseError


@dataclass(frozen=True)
class EngineConfig:
    base_url: str = DEFAULT_BASE_URL
    timeout: float = 10.0
    retries: int = 2
    box_threshold: float = 0.4
    text_threshold: float = 0.25
    temperature: float = 0.7
    repetition_penalty: float = 1.0
    max_tokens: int = 100
    embed_dim: int = 16
    categories_file: str | None = None
    bearer_token: str | None = None
    stub: bool = False
    seed: int = 0
    frames_per_clip: int = 8
    memory_window: int = 35
    qa_k: int = 5
    template_dir: str | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        for name in ("frames_per_clip", "memory_window", "workers"):
            if getattr(self, name) < 1:
                raise ParseError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.qa_k < 0:
            raise ParseError(f"qa_k must be >= 0, got {self.qa_k}")

    def agent_config(self) -> AgentConfig:
        categories: tuple[str, ...] = ()
        if self.categories_file is not None:
            categories = load_categories_file(self.categories_file)
        return AgentConfig(
            endpoints=default_endpoints(self.base_url),
            timeout=self.timeout,
            retries=self.retries,
            box_threshold=self.box_threshold,
            text_threshold=self.text_threshold,
            temperature=self.temperature,
            repetition_penalty=self.repetition_penalty,
            max_tokens=self.max_tokens,
            embed_dim=self.embed_dim,
            categories=categories,
            bearer_token=self.bearer_token,
        )

    def make_agents(self) -> Agents:
        if self.stub:
            return StubAgents(self.agent_config(), seed=self.seed)
        return HttpAgents(self.agent_config())


# (section, key) in the INI file -> EngineConfig field.
_FILE_KEYS: dict[tuple[str, str], str] = {
    ("agents", "base_url"): "base_url",
    ("agents", "timeout"): "timeout",
    ("agents", "retries"): "retries",
    ("agents", "box_threshold"): "box_threshold",
    ("agents", "text_threshold"): "text_threshold",
    ("agents", "temperature"): "temperature",
    ("agents", "repetition_penalty"): "repetition_penalty",
    ("agents", "max_tokens"): "max_tokens",
    ("agents", "embed_dim"): "embed_dim",
    ("agents", "categories_file"): "categories_file",
    ("agents", "bearer_token"): "bearer_token",
    ("agents", "stub"): "stub",
    ("agents", "seed"): "seed",
    ("pipeline", "frames_per_clip"): "frames_per_clip",
    ("pipeline", "memory_window"): "memory_window",
    ("prompting", "template_dir"): "template_dir",
    ("tasks", "qa_k"): "qa_k",
    ("cli", "workers"): "workers",
}

# Environment variables mirror the CLI flag names with a fixed prefix.
ENV_PREFIX = "VIDEOSTORY_"
_ENV_KEYS: dict[str, str] = {
    "STUB": "stub",
    "SEED": "seed",
    "FRAMES_PER_CLIP": "frames_per_clip",
    "MEMORY_WINDOW": "memory_window",
    "QA_K": "qa_k",
    "WORKERS": "workers",
}

_TRUE_WORDS = frozenset({"1", "true", "yes", "on"})
_FALSE_WORDS = frozenset({"0", "false", "no", "off"})


def _coerce(field_name: str, raw: str, where: str) -> Any:
    kind = {f.name: f.type for f in fields(EngineConfig)}[field_name]
    text = raw.strip()
    try:
        if kind == "bool":
            lowered = text.lower()
            if lowered in _TRUE_WORDS:
                return True
            if lowered in _FALSE_WORDS:
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        return text
    except ValueError as exc:
        raise ParseError(f"{where}: bad value for {field_name}: {exc}") from exc


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Parse an INI config file into EngineConfig field overrides."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    overrides: dict[str, Any] = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            field_name = _FILE_KEYS.get((section, key))
            if field_name is None:
                raise ParseError(f"{path}: unknown config key [{section}] {key}")
            overrides[field_name] = _coerce(field_name, raw, f"{path} [{section}] {key}")
    return overrides


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, Any]:
    environ = environ if environ is not None else os.environ
    overrides: dict[str, Any] = {}
    for suffix, field_name in _ENV_KEYS.items():
        raw = environ.get(ENV_PREFIX + suffix)
        if raw is not None:
            overrides[field_name] = _coerce(field_name, raw, ENV_PREFIX + suffix)
    return overrides


def resolve_config(
    config_path: str | Path | None = None,
    environ: Mapping[str, str] | None = None,
    **flag_overrides: Any,
) -> EngineConfig:
    """Defaults, then file, then environment, then flags; None flags ignored."""
    config = EngineConfig()
    if config_path is not None:
        config = replace(config, **load_config_file(config_path))
    env = env_overrides(environ)
    if env:
        config = replace(config, **env)
    flags = {key: value for key, value in flag_overrides.items() if value is not None}
    if flags:
        unknown = set(flags) - {f.name for f in fields(EngineConfig)}
        if unknown:
            raise ParseError(f"unknown config overrides: {sorted(unknown)}")
        config = replace(config, **flags)
    return config
