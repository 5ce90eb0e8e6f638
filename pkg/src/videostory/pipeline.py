"""End-to-end orchestration: clips to chapters to a whole-video story.

Per clip: sample frames, embed them, drop visually redundant ones, run the
detector and captioner on what is left, classify the action over the full
sample, then ask the language model for a chapter. Per video: drop textually
redundant chapters, render the story prompt from the survivors, and summarize.

Agent failures are contained at clip granularity: the failing step is logged
on the clip record and the run continues, so one flaky frame never sinks a
long video. Persisted files are byte-stable (sorted keys, fixed-width floats),
which makes stub runs byte-for-byte reproducible.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

from .agents.base import Agents
from .agents.types import ActionLabel, Detection, FrameCaption
from .errors import (
    AgentError,
    DimensionError,
    EmptyInputError,
    MissingEmbeddingError,
    MissingFieldError,
    ParseError,
    SchemaVersionError,
)
from .frames import FrameProvider
from .ingest import (
    DEFAULT_FRAMES_PER_CLIP,
    ClipSpan,
    KeyframeIndex,
    SampledClip,
    VideoMeta,
    segment,
    uniform_sample,
)
from .prompting import (
    PromptTemplateSet,
    bucket_temporal,
    load_templates,
    render_clip_prompt,
    render_image_caption_prompt,
    render_story_prompt,
)
from .redundancy import DEFAULT_MEMORY_WINDOW, reduce_chapters, reduce_frames

SCHEMA_VERSION = "1"

# One failure class per perception step; chapter interpretation adds its own.
_CLIP_STEP_ERRORS = (AgentError, DimensionError, MissingEmbeddingError, MissingFieldError)


@dataclass
class PerceptionBundle:
    """Everything the perception agents extracted from one sampled clip."""

    clip_index: int
    span: ClipSpan
    sampled_frames: list[int]
    retained_frames: list[int]
    action: ActionLabel | None
    detections: dict[int, list[Detection]]
    captions: list[FrameCaption]
    partial: bool = False
    errors: list[str] = field(default_factory=list)


@dataclass
class Chapter:
    clip_index: int
    text: str
    embedding: tuple[float, ...]
    temporal_bucket: str
    retained: bool = True

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("chapter text must be nonempty")


@dataclass(frozen=True)
class Story:
    text: str


@dataclass(frozen=True)
class Stats:
    chapters_bytes: int
    story_bytes: int
    total_bytes: int


@dataclass
class ClipRecord:
    """Persisted view of one clip: perception output plus its chapter."""

    clip_index: int
    span: ClipSpan
    retained_frames: list[int]
    action: ActionLabel | None
    detections: dict[int, list[Detection]]
    captions: list[FrameCaption]
    chapter: Chapter | None
    temporal_bucket: str
    partial: bool
    errors: list[str]

    @property
    def retained(self) -> bool:
        return self.chapter is not None and self.chapter.retained


@dataclass
class HierarchicalRepresentation:
    video_id: str
    fps: float
    total_frames: int
    clips: list[ClipRecord]
    story: Story
    stats: Stats

    def retained_chapters(self) -> list[Chapter]:
        return [c.chapter for c in self.clips if c.chapter is not None and c.chapter.retained]

    def failed_clips(self) -> list[ClipRecord]:
        return [c for c in self.clips if c.chapter is None]


def compute_stats(chapters: Sequence[Chapter], story: Story) -> Stats:
    chapters_bytes = sum(len(ch.text.encode("utf-8")) for ch in chapters if ch.retained)
    story_bytes = len(story.text.encode("utf-8"))
    return Stats(
        chapters_bytes=chapters_bytes,
        story_bytes=story_bytes,
        total_bytes=chapters_bytes + story_bytes,
    )


def perceive_clip(
    clip: SampledClip,
    agents: Agents,
    provider: FrameProvider,
    video_id: str,
    templates: PromptTemplateSet | None = None,
) -> PerceptionBundle:
    """Run embed/reduce/detect/caption/action for one clip, logging failures."""
    templates = templates if templates is not None else load_templates()
    errors: list[str] = []
    frame_bytes = {ref.index: provider.frame_bytes(video_id, ref.index) for ref in clip.frames}

    reduced = clip
    try:
        embeddings = {idx: agents.embed_image(data) for idx, data in frame_bytes.items()}
        reduced = reduce_frames(clip, embeddings)
    except _CLIP_STEP_ERRORS as exc:
        # Without embeddings there is no redundancy signal; keep every frame.
        errors.append(f"embed_image: {exc}")

    action: ActionLabel | None = None
    try:
        ordered = [frame_bytes[ref.index] for ref in clip.frames]
        action = agents.recognize_action(ordered, clip_index=clip.span.clip_index)
    except _CLIP_STEP_ERRORS as exc:
        errors.append(f"recognize_action: {exc}")

    caption_prompt = render_image_caption_prompt(templates)
    detections: dict[int, list[Detection]] = {}
    captions: list[FrameCaption] = []
    for ref in reduced.frames:
        data = frame_bytes[ref.index]
        try:
            detections[ref.index] = agents.detect_objects(data, frame_index=ref.index)
        except _CLIP_STEP_ERRORS as exc:
            detections[ref.index] = []
            errors.append(f"detect_objects[{ref.index}]: {exc}")
        try:
            captions.append(agents.caption_frame(ref.index, data, caption_prompt))
        except _CLIP_STEP_ERRORS as exc:
            errors.append(f"caption_frame[{ref.index}]: {exc}")

    return PerceptionBundle(
        clip_index=clip.span.clip_index,
        span=clip.span,
        sampled_frames=[ref.index for ref in clip.frames],
        retained_frames=[ref.index for ref in reduced.frames],
        action=action,
        detections=detections,
        captions=captions,
        partial=bool(errors),
        errors=errors,
    )


def interpret_clip(
    bundle: PerceptionBundle,
    agents: Agents,
    total_frames: int,
    templates: PromptTemplateSet | None = None,
) -> Chapter:
    """Chapter text from the LLM plus its embedding and temporal bucket."""
    templates = templates if templates is not None else load_templates()
    prompt = render_clip_prompt(bundle, templates)
    text = agents.complete(prompt)
    embedding = agents.embed_text(text)
    return Chapter(
        clip_index=bundle.clip_index,
        text=text,
        embedding=tuple(embedding),
        temporal_bucket=bucket_temporal(bundle.span.start_frame / total_frames),
    )


def summarize_story(
    chapters: Sequence[Chapter],
    agents: Agents,
    memory_window: int = DEFAULT_MEMORY_WINDOW,
    templates: PromptTemplateSet | None = None,
) -> Story:
    """Reduce textual redundancy, mark retained flags, summarize survivors."""
    templates = templates if templates is not None else load_templates()
    if not chapters:
        raise EmptyInputError("story summarization requires at least one chapter")
    kept = {id(ch) for ch in reduce_chapters(list(chapters), memory_window)}
    for chapter in chapters:
        chapter.retained = id(chapter) in kept
    prompt = render_story_prompt([ch for ch in chapters if ch.retained], templates)
    return Story(text=agents.complete(prompt))


def _q6(value: float) -> float:
    return round(value, 6)


def _quantize_chapter(chapter: Chapter) -> Chapter:
    chapter.embedding = tuple(_q6(v) for v in chapter.embedding)
    return chapter


def _quantize_bundle(bundle: PerceptionBundle) -> PerceptionBundle:
    if bundle.action is not None:
        bundle.action = replace(bundle.action, score=_q6(bundle.action.score))
    bundle.detections = {
        idx: [
            replace(d, box=tuple(_q6(v) for v in d.box), score=_q6(d.score))
            for d in found
        ]
        for idx, found in bundle.detections.items()
    }
    return bundle


def build_representation(
    meta: VideoMeta,
    keyframes: KeyframeIndex,
    agents: Agents,
    provider: FrameProvider,
    frames_per_clip: int = DEFAULT_FRAMES_PER_CLIP,
    memory_window: int = DEFAULT_MEMORY_WINDOW,
    templates: PromptTemplateSet | None = None,
    workers: int = 1,
) -> HierarchicalRepresentation:
    """Full pipeline for one video; deterministic for a fixed agent seed.

    Clips may be perceived and interpreted concurrently, but results are
    merged in clip order and the chapter reduction runs as a sequential
    barrier, so worker count never changes the output.
    """
    templates = templates if templates is not None else load_templates()
    spans = segment(meta, keyframes)
    sampled = [uniform_sample(span, frames_per_clip, meta.fps) for span in spans]

    def run_clip(clip: SampledClip) -> tuple[PerceptionBundle, Chapter | None]:
        bundle = perceive_clip(clip, agents, provider, meta.video_id, templates)
        try:
            chapter = interpret_clip(bundle, agents, meta.total_frames, templates)
        except _CLIP_STEP_ERRORS as exc:
            bundle.errors.append(f"interpret_clip: {exc}")
            bundle.partial = True
            chapter = None
        return _quantize_bundle(bundle), chapter

    if workers > 1 and len(sampled) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_clip, sampled))
    else:
        results = [run_clip(clip) for clip in sampled]

    chapters = [_quantize_chapter(ch) for _, ch in results if ch is not None]
    story = summarize_story(chapters, agents, memory_window, templates) if chapters else Story(text="")

    records = [
        ClipRecord(
            clip_index=bundle.clip_index,
            span=bundle.span,
            retained_frames=bundle.retained_frames,
            action=bundle.action,
            detections=bundle.detections,
            captions=bundle.captions,
            chapter=chapter,
            temporal_bucket=bucket_temporal(bundle.span.start_frame / meta.total_frames),
            partial=bundle.partial,
            errors=bundle.errors,
        )
        for bundle, chapter in results
    ]
    return HierarchicalRepresentation(
        video_id=meta.video_id,
        fps=_q6(meta.fps),
        total_frames=meta.total_frames,
        clips=records,
        story=story,
        stats=compute_stats(chapters, story),
    )


def _emit(value: Any, out: list[str], indent: int) -> None:
    """JSON with sorted keys, %.6f floats, and 2-space indent; LF only."""
    pad = "  " * indent
    if isinstance(value, dict):
        if not value:
            out.append("{}")
            return
        out.append("{\n")
        keys = sorted(value)
        for i, key in enumerate(keys):
            out.append(f"{pad}  {json.dumps(key, ensure_ascii=False)}: ")
            _emit(value[key], out, indent + 1)
            out.append(",\n" if i < len(keys) - 1 else "\n")
        out.append(f"{pad}}}")
    elif isinstance(value, (list, tuple)):
        if not value:
            out.append("[]")
            return
        out.append("[\n")
        for i, item in enumerate(value):
            out.append(f"{pad}  ")
            _emit(item, out, indent + 1)
            out.append(",\n" if i < len(value) - 1 else "\n")
        out.append(f"{pad}]")
    elif isinstance(value, bool) or value is None:
        out.append(json.dumps(value))
    elif isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"cannot serialize non-finite float {value!r}")
        out.append(f"{value:.6f}")
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    else:
        raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps_canonical(data: Any) -> str:
    out: list[str] = []
    _emit(data, out, 0)
    out.append("\n")
    return "".join(out)


def _action_to_json(action: ActionLabel | None) -> dict[str, Any] | None:
    if action is None:
        return None
    return {"label": action.label, "score": action.score}


def _rep_to_json(rep: HierarchicalRepresentation) -> dict[str, Any]:
    clips = []
    for record in rep.clips:
        chapter = record.chapter
        clips.append(
            {
                "action": _action_to_json(record.action),
                "captions": [{"frame_index": c.frame_index, "text": c.text} for c in record.captions],
                "chapter": None
                if chapter is None
                else {"embedding": list(chapter.embedding), "text": chapter.text},
                "clip_index": record.clip_index,
                "detections": [
                    {
                        "detections": [
                            {"box": list(d.box), "label": d.label, "score": d.score}
                            for d in record.detections[idx]
                        ],
                        "frame_index": idx,
                    }
                    for idx in sorted(record.detections)
                ],
                "errors": list(record.errors),
                "partial": record.partial,
                "retained": record.retained,
                "retained_frames": list(record.retained_frames),
                "span": {"end_frame": record.span.end_frame, "start_frame": record.span.start_frame},
                "temporal_bucket": record.temporal_bucket,
            }
        )
    return {
        "clips": clips,
        "fps": rep.fps,
        "schema_version": SCHEMA_VERSION,
        "stats": {
            "chapters_bytes": rep.stats.chapters_bytes,
            "story_bytes": rep.stats.story_bytes,
            "total_bytes": rep.stats.total_bytes,
        },
        "story": {"text": rep.story.text},
        "total_frames": rep.total_frames,
        "video_id": rep.video_id,
    }


def dumps_representation(rep: HierarchicalRepresentation) -> str:
    """Byte-stable serialized form (the exact on-disk content)."""
    return dumps_canonical(_rep_to_json(rep))


def save_representation(rep: HierarchicalRepresentation, path: str | Path) -> None:
    Path(path).write_bytes(dumps_representation(rep).encode("utf-8"))


def _require(data: Mapping[str, Any], key: str, kind: type | tuple[type, ...], where: str) -> Any:
    if key not in data:
        raise ParseError(f"{where}: missing key {key!r}")
    value = data[key]
    if not isinstance(value, kind):
        raise ParseError(f"{where}: key {key!r} has type {type(value).__name__}")
    return value


def _floats(values: Any, where: str) -> tuple[float, ...]:
    if not isinstance(values, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        raise ParseError(f"{where}: expected a list of numbers")
    return tuple(float(v) for v in values)


def _clip_from_json(data: Mapping[str, Any]) -> ClipRecord:
    where = "clip"
    clip_index = _require(data, "clip_index", int, where)
    span_data = _require(data, "span", dict, where)
    span = ClipSpan(
        clip_index=clip_index,
        start_frame=_require(span_data, "start_frame", int, where),
        end_frame=_require(span_data, "end_frame", int, where),
    )
    action_data = data.get("action")
    action = None
    if action_data is not None:
        if not isinstance(action_data, dict):
            raise ParseError("clip: 'action' must be an object or null")
        action = ActionLabel(
            label=_require(action_data, "label", str, "action"),
            score=float(_require(action_data, "score", (int, float), "action")),
        )
    detections: dict[int, list[Detection]] = {}
    for group in _require(data, "detections", list, where):
        if not isinstance(group, dict):
            raise ParseError("clip: detection group must be an object")
        idx = _require(group, "frame_index", int, "detection group")
        entries = _require(group, "detections", list, "detection group")
        if not all(isinstance(d, dict) for d in entries):
            raise ParseError("clip: each detection must be an object")
        detections[idx] = [
            Detection(
                label=_require(d, "label", str, "detection"),
                box=_floats(_require(d, "box", list, "detection"), "detection box"),
                score=float(_require(d, "score", (int, float), "detection")),
            )
            for d in entries
        ]
    caption_entries = _require(data, "captions", list, where)
    if not all(isinstance(c, dict) for c in caption_entries):
        raise ParseError("clip: each caption must be an object")
    captions = [
        FrameCaption(
            frame_index=_require(c, "frame_index", int, "caption"),
            text=_require(c, "text", str, "caption"),
        )
        for c in caption_entries
    ]
    temporal_bucket = _require(data, "temporal_bucket", str, where)
    chapter_data = data.get("chapter")
    chapter = None
    if chapter_data is not None:
        if not isinstance(chapter_data, dict):
            raise ParseError("clip: 'chapter' must be an object or null")
        chapter = Chapter(
            clip_index=clip_index,
            text=_require(chapter_data, "text", str, "chapter"),
            embedding=_floats(_require(chapter_data, "embedding", list, "chapter"), "chapter embedding"),
            temporal_bucket=temporal_bucket,
            retained=_require(data, "retained", bool, where),
        )
    return ClipRecord(
        clip_index=clip_index,
        span=span,
        retained_frames=[int(v) for v in _require(data, "retained_frames", list, where)],
        action=action,
        detections=detections,
        captions=captions,
        chapter=chapter,
        temporal_bucket=temporal_bucket,
        partial=_require(data, "partial", bool, where),
        errors=[str(v) for v in _require(data, "errors", list, where)],
    )


def load_representation(path: str | Path) -> HierarchicalRepresentation:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not valid UTF-8: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"{path}: unsupported schema_version {version!r}")
    where = "representation"
    total_frames = _require(data, "total_frames", int, where)
    stats_data = _require(data, "stats", dict, where)
    raw_clips = _require(data, "clips", list, where)
    if not all(isinstance(c, dict) for c in raw_clips):
        raise ParseError(f"{path}: each clip must be an object")
    clips = [_clip_from_json(c) for c in raw_clips]
    clips.sort(key=lambda record: record.clip_index)
    return HierarchicalRepresentation(
        video_id=_require(data, "video_id", str, where),
        fps=float(_require(data, "fps", (int, float), where)),
        total_frames=total_frames,
        clips=clips,
        story=Story(text=_require(_require(data, "story", dict, where), "text", str, "story")),
        stats=Stats(
            chapters_bytes=_require(stats_data, "chapters_bytes", int, "stats"),
            story_bytes=_require(stats_data, "story_bytes", int, "stats"),
            total_bytes=_require(stats_data, "total_bytes", int, "stats"),
        ),
    )
