"""Video metadata, keyframe-based segmentation, and uniform frame sampling.

Everything here is a pure function over immutable inputs; callers may invoke
them from any number of concurrent workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyIndexError, ParseError, RangeError

DEFAULT_FRAMES_PER_CLIP = 8


@dataclass(frozen=True)
class VideoMeta:
    """Identity and addressing info for one video.

    ``frame_source`` is an opaque locator (typically a directory of frame
    images) that a frame provider knows how to interpret; it is never opened
    here.
    """

    video_id: str
    total_frames: int
    fps: float
    frame_source: str | None = None

    def __post_init__(self) -> None:
        if not self.video_id:
            raise ValueError("video_id must be nonempty")
        if self.total_frames < 0:
            raise ValueError("total_frames must be >= 0")
        if not self.fps > 0:
            raise ValueError("fps must be > 0")


@dataclass(frozen=True)
class KeyframeIndex:
    """Strictly increasing frame indices, starting at 0, all < total_frames."""

    keyframes: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.keyframes:
            raise ValueError("keyframes must be nonempty")
        if self.keyframes[0] != 0:
            raise ValueError("normalized index must start at frame 0")
        for a, b in zip(self.keyframes, self.keyframes[1:]):
            if b <= a:
                raise ValueError("keyframes must be strictly increasing")

    def __len__(self) -> int:
        return len(self.keyframes)


@dataclass(frozen=True)
class ClipSpan:
    """Half-open frame interval [start_frame, end_frame) for clip ``clip_index``."""

    clip_index: int
    start_frame: int
    end_frame: int

    def __post_init__(self) -> None:
        if self.start_frame >= self.end_frame:
            raise ValueError("span must be nonempty (start_frame < end_frame)")

    def __len__(self) -> int:
        return self.end_frame - self.start_frame


@dataclass(frozen=True)
class FrameRef:
    index: int
    timestamp: float


@dataclass(frozen=True)
class SampledClip:
    """A clip span plus the frames actually selected from it, ascending."""

    span: ClipSpan
    frames: tuple[FrameRef, ...]


def load_video_meta(path: str | Path) -> VideoMeta:
    """Read a video-meta JSON file.

    Accepts any JSON object carrying ``video_id``, ``total_frames`` and
    ``fps`` (so a keyframe sidecar file parses as a meta file too); unknown
    keys are ignored. ``frame_source`` is optional.
    """
    raw = _read_json_object(path)
    try:
        video_id = raw["video_id"]
        total_frames = raw["total_frames"]
        fps = raw["fps"]
    except KeyError as exc:
        raise ParseError(f"{path}: missing required key {exc}") from exc
    if not isinstance(video_id, str) or not isinstance(total_frames, int) or isinstance(total_frames, bool):
        raise ParseError(f"{path}: video_id must be a string and total_frames an integer")
    if not isinstance(fps, (int, float)) or isinstance(fps, bool) or fps <= 0:
        raise ParseError(f"{path}: fps must be a positive number")
    frame_source = raw.get("frame_source")
    if frame_source is not None and not isinstance(frame_source, str):
        raise ParseError(f"{path}: frame_source must be a string when present")
    try:
        return VideoMeta(video_id=video_id, total_frames=total_frames, fps=float(fps), frame_source=frame_source)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def load_keyframe_index(path: str | Path, meta: VideoMeta) -> KeyframeIndex:
    """Load and normalize a keyframe sidecar file against ``meta``.

    Normalization prepends frame 0 when absent so no leading frames are
    orphaned. Raises ParseError for schema/consistency problems, RangeError
    for indices outside [0, total_frames), and EmptyIndexError when the video
    has no frames at all.
    """
    raw = _read_json_object(path)
    for key in ("video_id", "total_frames", "fps", "keyframes"):
        if key not in raw:
            raise ParseError(f"{path}: missing required key '{key}'")
    if raw["video_id"] != meta.video_id:
        raise ParseError(f"{path}: video_id {raw['video_id']!r} does not match {meta.video_id!r}")
    if raw["total_frames"] != meta.total_frames:
        raise ParseError(
            f"{path}: total_frames {raw['total_frames']!r} does not match {meta.total_frames}"
        )
    keyframes = raw["keyframes"]
    if not isinstance(keyframes, list) or any(
        not isinstance(k, int) or isinstance(k, bool) for k in keyframes
    ):
        raise ParseError(f"{path}: keyframes must be a list of integers")
    return normalize_keyframes(keyframes, meta.total_frames)


def normalize_keyframes(indices: list[int], total_frames: int) -> KeyframeIndex:
    """Validate raw keyframe indices and prepend the implicit frame 0."""
    if total_frames == 0:
        raise EmptyIndexError("video has no frames, keyframe index cannot be normalized")
    for idx in indices:
        if idx < 0 or idx >= total_frames:
            raise RangeError(f"keyframe {idx} outside [0, {total_frames})")
    for a, b in zip(indices, indices[1:]):
        if b <= a:
            raise ParseError("keyframes must be strictly increasing")
    if not indices or indices[0] != 0:
        indices = [0, *indices]
    return KeyframeIndex(keyframes=tuple(indices))


def segment(meta: VideoMeta, index: KeyframeIndex) -> list[ClipSpan]:
    """Partition [0, total_frames) into one span per keyframe.

    Span k runs from keyframe k to keyframe k+1; the last span runs to the
    end of the video so every frame belongs to exactly one clip.
    """
    keys = index.keyframes
    if keys[-1] >= meta.total_frames:
        raise RangeError(f"keyframe {keys[-1]} outside [0, {meta.total_frames})")
    bounds = [*keys, meta.total_frames]
    return [
        ClipSpan(clip_index=k, start_frame=bounds[k], end_frame=bounds[k + 1])
        for k in range(len(keys))
    ]


def uniform_sample(span: ClipSpan, n: int = DEFAULT_FRAMES_PER_CLIP, fps: float = 1.0) -> SampledClip:
    """Pick min(n, len(span)) evenly spaced frames from ``span``.

    Index j maps to start + floor(j * len / m); the first sample is always
    the span's keyframe and indices are distinct and ascending. Timestamps
    are index / fps, rounded to microsecond-ish precision.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    length = len(span)
    m = min(n, length)
    indices = [span.start_frame + (j * length) // m for j in range(m)]
    frames = tuple(FrameRef(index=i, timestamp=round(i / fps, 6)) for i in indices)
    return SampledClip(span=span, frames=frames)


def _read_json_object(path: str | Path) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{p}: cannot read file: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{p}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{p}: expected a JSON object")
    return raw
