"""Domain types shared by the live agent client and the deterministic stubs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

from ..errors import DimensionError, ProtocolError

Vector = tuple[float, ...]

CAPABILITIES = ("embed_image", "embed_text", "detect", "action", "caption", "chat")

DEFAULT_BASE_URL = "http://127.0.0.1:8090"

_ENDPOINT_PATHS = {
    "embed_image": "/v1/embed_image",
    "embed_text": "/v1/embed_text",
    "detect": "/v1/detect",
    "action": "/v1/action",
    "caption": "/v1/caption",
    "chat": "/v1/chat",
}


def default_endpoints(base_url: str = DEFAULT_BASE_URL) -> dict[str, str]:
    base = base_url.rstrip("/")
    return {cap: base + path for cap, path in _ENDPOINT_PATHS.items()}


def load_default_categories() -> tuple[str, ...]:
    """Object labels shipped with the package, one per line."""
    text = resources.files("videostory").joinpath("data/categories.txt").read_text("utf-8")
    return tuple(line.strip() for line in text.splitlines() if line.strip())


def load_categories_file(path: str | Path) -> tuple[str, ...]:
    text = Path(path).read_text(encoding="utf-8")
    return tuple(line.strip() for line in text.splitlines() if line.strip())


@dataclass(frozen=True)
class Detection:
    """One detected object with a normalized [0,1] box."""

    label: str
    box: tuple[float, float, float, float]
    score: float

    def __post_init__(self) -> None:
        x_min, y_min, x_max, y_max = self.box
        if not (x_min < x_max and y_min < y_max):
            raise ValueError(f"degenerate box {self.box}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")

    @property
    def center(self) -> tuple[float, float]:
        x_min, y_min, x_max, y_max = self.box
        return ((x_min + x_max) / 2.0, (y_min + y_max) / 2.0)

    @property
    def area(self) -> float:
        x_min, y_min, x_max, y_max = self.box
        return (x_max - x_min) * (y_max - y_min)


@dataclass(frozen=True)
class ActionLabel:
    label: str
    score: float


@dataclass(frozen=True)
class FrameCaption:
    frame_index: int
    text: str


@dataclass(frozen=True)
class AgentConfig:
    """Endpoints and model parameters for the six capabilities.

    Defaults follow the deployment this engine was tuned for: detector box
    threshold 0.4 / text threshold 0.25, chat temperature 0.7 with
    repetition penalty 1.0 and a 100-token cap.
    """

    endpoints: dict[str, str] = field(default_factory=default_endpoints)
    timeout: float = 10.0
    retries: int = 2
    box_threshold: float = 0.4
    text_threshold: float = 0.25
    temperature: float = 0.7
    repetition_penalty: float = 1.0
    max_tokens: int = 100
    embed_dim: int = 16
    categories: tuple[str, ...] = ()
    bearer_token: str | None = None

    def __post_init__(self) -> None:
        for name, value in (("box_threshold", self.box_threshold), ("text_threshold", self.text_threshold)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} {value} outside [0, 1]")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.embed_dim < 1:
            raise ValueError("embed_dim must be >= 1")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if not self.categories:
            object.__setattr__(self, "categories", load_default_categories())

    def endpoint(self, capability: str) -> str:
        try:
            return self.endpoints[capability]
        except KeyError as exc:
            raise ValueError(f"no endpoint configured for capability {capability!r}") from exc


def validate_embedding(values: Sequence[float], expected_dim: int) -> Vector:
    """Check a returned embedding against the configured dimension.

    DimensionError for a length mismatch, ProtocolError for non-finite or
    non-numeric entries.
    """
    if len(values) != expected_dim:
        raise DimensionError(f"embedding has {len(values)} values, configured dim is {expected_dim}")
    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ProtocolError(f"embedding contains non-finite value {v!r}")
        out.append(float(v))
    return tuple(out)


def filter_detections(detections: Sequence[Detection], cfg: AgentConfig) -> list[Detection]:
    """Keep detections at or above the box threshold, in service order."""
    return [d for d in detections if d.score >= cfg.box_threshold]


def truncate_completion(text: str, cfg: AgentConfig) -> str:
    """Defensive client-side cap: services enforce max_tokens, we cap chars."""
    return text[: 4 * cfg.max_tokens]
