"""Semantic redundancy reduction at the frame and chapter level.

Frame level: within one sampled clip, a non-key frame is dropped when its
cosine similarity to the keyframe embedding is strictly above the clip's mean
non-key similarity. Chapter level: a chapter is dropped when its similarity to
the rolling mean of the preceding chapter embeddings strictly exceeds the
global mean of those similarities. Ties are always retained, and so are the
anchors (the keyframe, the first chapter).

All arithmetic is plain Python (fsum/sqrt) so results are bit-stable across
platforms and never depend on an optional numeric library.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence, TypeVar

from .errors import DimensionError, MissingEmbeddingError
from .ingest import SampledClip

Vector = Sequence[float]

# Anything carrying an .embedding attribute participates in chapter reduction.
C = TypeVar("C")

DEFAULT_MEMORY_WINDOW = 35


def cosine(a: Vector, b: Vector) -> float:
    """Cosine similarity with a zero-norm convention of 0.0.

    Identical inputs short-circuit to exactly 1.0 so that tie-at-mean cases
    (every frame equal to the keyframe) are decided by exact arithmetic
    rather than by the last bit of a square root.
    """
    if len(a) != len(b):
        raise DimensionError(f"cosine requires equal dims, got {len(a)} and {len(b)}")
    norm_a = math.fsum(x * x for x in a)
    norm_b = math.fsum(y * y for y in b)
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    if tuple(a) == tuple(b):
        return 1.0
    dot = math.fsum(x * y for x, y in zip(a, b))
    value = dot / (math.sqrt(norm_a) * math.sqrt(norm_b))
    return max(-1.0, min(1.0, value))


def frame_similarities(clip: SampledClip, embeddings: Mapping[int, Vector]) -> list[float]:
    """Similarity of each non-key sampled frame to the clip keyframe."""
    missing = [ref.index for ref in clip.frames if ref.index not in embeddings]
    if missing:
        raise MissingEmbeddingError(f"no embedding for frames {missing} of clip {clip.span.clip_index}")
    key = embeddings[clip.frames[0].index]
    return [cosine(key, embeddings[ref.index]) for ref in clip.frames[1:]]


def reduce_frames(clip: SampledClip, embeddings: Mapping[int, Vector]) -> SampledClip:
    """Drop non-key frames strictly more similar to the keyframe than average."""
    scores = frame_similarities(clip, embeddings)
    if not scores:
        return clip
    mean = math.fsum(scores) / len(scores)
    kept = [clip.frames[0]]
    kept.extend(ref for ref, s in zip(clip.frames[1:], scores) if s <= mean)
    return SampledClip(span=clip.span, frames=tuple(kept))


class MemoryWindow:
    """Rolling buffer of the last ``l`` embeddings with an fsum-based mean."""

    def __init__(self, l: int = DEFAULT_MEMORY_WINDOW) -> None:
        if l < 1:
            raise ValueError(f"memory window must be >= 1, got {l}")
        self.l = l
        self._buffer: list[tuple[float, ...]] = []

    def __len__(self) -> int:
        return len(self._buffer)

    def push(self, embedding: Vector) -> None:
        self._buffer.append(tuple(embedding))
        if len(self._buffer) > self.l:
            del self._buffer[0]

    def mean(self) -> tuple[float, ...] | None:
        if not self._buffer:
            return None
        first = self._buffer[0]
        # The mean of identical vectors is that vector; computing it through
        # sum/count can drift an ulp (fsum([0.1]*3)/3 != 0.1) and would turn
        # the all-identical tie case into a spurious removal.
        if all(vec == first for vec in self._buffer[1:]):
            return first
        count = len(self._buffer)
        return tuple(math.fsum(vec[d] for vec in self._buffer) / count for d in range(len(first)))


def chapter_similarities(chapter_embs: Sequence[Vector], l: int = DEFAULT_MEMORY_WINDOW) -> list[float | None]:
    """d_i against the mean of up to ``l`` preceding embeddings; d_1 is None."""
    window = MemoryWindow(l)
    scores: list[float | None] = []
    for emb in chapter_embs:
        mean = window.mean()
        scores.append(None if mean is None else cosine(emb, mean))
        window.push(emb)
    return scores


def reduce_chapters(chapters: Sequence[C], l: int = DEFAULT_MEMORY_WINDOW) -> list[C]:
    """Keep chapters whose history similarity does not exceed the global mean.

    Two passes: similarities are computed over the original sequence (removed
    chapters still count as history), then the mean of the defined scores
    becomes the retention threshold. The first chapter has no history and is
    always kept.
    """
    scores = chapter_similarities([ch.embedding for ch in chapters], l)
    defined = [s for s in scores if s is not None]
    if not defined:
        return list(chapters)
    threshold = math.fsum(defined) / len(defined)
    return [ch for ch, s in zip(chapters, scores) if s is None or s <= threshold]
