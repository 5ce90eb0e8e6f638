"""videostory: hierarchical textual representations of long videos.

Segments a video at its keyframes, samples and deduplicates frames, turns
perception output into per-clip chapters and a whole-video story via prompt
templates and a language model, and runs retrieval and QA harnesses over the
persisted representations.
"""

from .agents import AgentConfig, HttpAgents, ScriptedFixtures, StubAgents
from .config import EngineConfig, resolve_config
from .errors import VideoStoryError
from .ingest import (
    ClipSpan,
    KeyframeIndex,
    SampledClip,
    VideoMeta,
    normalize_keyframes,
    segment,
    uniform_sample,
)
from .pipeline import (
    Chapter,
    HierarchicalRepresentation,
    PerceptionBundle,
    Story,
    build_representation,
    load_representation,
    save_representation,
)
from .redundancy import cosine, reduce_chapters, reduce_frames
from .tasks import Corpus, QAConfig, answer, exact_match, rank, recall_at_k

__version__ = "0.1.0"

__all__ = [
    "AgentConfig",
    "Chapter",
    "ClipSpan",
    "Corpus",
    "EngineConfig",
    "HierarchicalRepresentation",
    "HttpAgents",
    "KeyframeIndex",
    "PerceptionBundle",
    "QAConfig",
    "SampledClip",
    "ScriptedFixtures",
    "Story",
    "StubAgents",
    "VideoMeta",
    "VideoStoryError",
    "answer",
    "build_representation",
    "cosine",
    "exact_match",
    "load_representation",
    "normalize_keyframes",
    "rank",
    "recall_at_k",
    "reduce_chapters",
    "reduce_frames",
    "resolve_config",
    "save_representation",
    "segment",
    "uniform_sample",
    "__version__",
]
