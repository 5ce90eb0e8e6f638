"""Pluggable perception and language agents plus their offline stand-ins."""

from .base import Agents
from .live import HttpAgents
from .stubs import ScriptedFixtures, StubAgents
from .types import (
    CAPABILITIES,
    DEFAULT_BASE_URL,
    ActionLabel,
    AgentConfig,
    Detection,
    FrameCaption,
    Vector,
    default_endpoints,
    filter_detections,
    load_categories_file,
    load_default_categories,
    truncate_completion,
    validate_embedding,
)

__all__ = [
    "CAPABILITIES",
    "DEFAULT_BASE_URL",
    "ActionLabel",
    "AgentConfig",
    "Agents",
    "Detection",
    "FrameCaption",
    "HttpAgents",
    "ScriptedFixtures",
    "StubAgents",
    "Vector",
    "default_endpoints",
    "filter_detections",
    "load_categories_file",
    "load_default_categories",
    "truncate_completion",
    "validate_embedding",
]
