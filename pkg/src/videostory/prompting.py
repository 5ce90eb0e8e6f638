"""Prompt construction: spatial/size/temporal bucketing and template filling.

Templates live as UTF-8, LF-only files with ``<slot>`` placeholders and are
rendered byte-for-byte reproducibly. Slot filling is a single regex pass so
text inserted into one slot can never be re-expanded by a later slot.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

from .agents.types import Detection, FrameCaption
from .errors import EmptyInputError, MissingFieldError, ParseError, RangeError

LOW_BAND = 0.33
HIGH_BAND = 0.66

POSITION_BUCKETS = (
    ("top-left", "top", "top-right"),
    ("left", "center", "right"),
    ("bottom-left", "bottom", "bottom-right"),
)

TEMPORAL_BUCKETS = ("beginning", "early", "later", "final")

# Literal inserted for a bucket with no chapters; the story template closes
# the sentence, so the rendered text reads "..., nothing notable."
EMPTY_BUCKET_SENTINEL = "nothing notable"

TEMPLATE_NAMES = ("image_caption", "clip_description", "video_story", "video_qa", "short_answer")

_REQUIRED_SLOTS = {
    "image_caption": (),
    "clip_description": ("<clip action>", "<object>", "<image caption>"),
    "video_story": (
        "<clip description1>",
        "<clip description2>",
        "<clip description3>",
        "<clip description4>",
    ),
    "video_qa": ("<video info>", "<question>"),
    "short_answer": ("<question>", "<long answer>"),
}


def _check_unit(name: str, value: float) -> float:
    if not math.isfinite(value) or value < 0.0 or value > 1.0:
        raise RangeError(f"{name} must be in [0, 1], got {value!r}")
    return value


def _band(value: float) -> int:
    if value < LOW_BAND:
        return 0
    if value < HIGH_BAND:
        return 1
    return 2


def bucket_position(cx: float, cy: float) -> str:
    """Nine-region grid over the unit square; bands split at 0.33 / 0.66."""
    _check_unit("cx", cx)
    _check_unit("cy", cy)
    return POSITION_BUCKETS[_band(cy)][_band(cx)]


def bucket_size(area: float) -> str:
    _check_unit("area", area)
    if area < LOW_BAND:
        return "small"
    if area < HIGH_BAND:
        return "medium"
    return "large"


def bucket_temporal(start_fraction: float) -> str:
    """Equal quartiles of the video duration, keyed by clip start fraction."""
    if not math.isfinite(start_fraction) or start_fraction < 0.0 or start_fraction >= 1.0:
        raise RangeError(f"start_fraction must be in [0, 1), got {start_fraction!r}")
    return TEMPORAL_BUCKETS[min(int(start_fraction * 4.0), 3)]


@dataclass(frozen=True)
class PromptTemplateSet:
    image_caption: str
    clip_description: str
    video_story: str
    video_qa: str
    short_answer: str


def _read_template(name: str, text: str) -> str:
    if "\r" in text:
        raise ParseError(f"template {name!r} must use LF line endings")
    if text.endswith("\n"):
        text = text[:-1]
    for slot in _REQUIRED_SLOTS[name]:
        if slot not in text:
            raise ParseError(f"template {name!r} is missing the {slot} slot")
    return text


def _load_from(read: "callable[[str], bytes]") -> PromptTemplateSet:
    # Bytes, not text mode: universal-newline translation would hide CRLF.
    loaded = {}
    for name in TEMPLATE_NAMES:
        try:
            raw = read(name)
        except OSError as exc:
            raise ParseError(f"cannot read template {name!r}: {exc}") from exc
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"template {name!r} is not valid UTF-8") from exc
        loaded[name] = _read_template(name, text)
    return PromptTemplateSet(**loaded)


@lru_cache(maxsize=1)
def _packaged_templates() -> PromptTemplateSet:
    root = resources.files("videostory").joinpath("templates")
    return _load_from(lambda name: root.joinpath(f"{name}.txt").read_bytes())


def load_templates(template_dir: str | Path | None = None) -> PromptTemplateSet:
    """Packaged templates by default; ``template_dir`` overrides all five."""
    if template_dir is None:
        return _packaged_templates()
    base = Path(template_dir)
    return _load_from(lambda name: (base / f"{name}.txt").read_bytes())


def _fill(template: str, values: Mapping[str, str]) -> str:
    pattern = re.compile("|".join(re.escape(slot) for slot in values))
    return pattern.sub(lambda match: values[match.group(0)], template)


class ClipInfo(Protocol):
    """What clip-prompt rendering needs from a perception bundle."""

    @property
    def action(self) -> object: ...

    @property
    def detections(self) -> Mapping[int, Sequence[Detection]]: ...

    @property
    def captions(self) -> Sequence[FrameCaption]: ...


class ChapterInfo(Protocol):
    @property
    def text(self) -> str: ...

    @property
    def temporal_bucket(self) -> str: ...


def describe_detection(detection: Detection) -> str:
    cx, cy = detection.center
    return f"{detection.label} ({bucket_position(cx, cy)}, {bucket_size(detection.area)})"


def format_objects(detections: Mapping[int, Sequence[Detection]]) -> str:
    """Brace-wrapped per-frame groups; frames without detections are absent."""
    groups = []
    for frame_index in sorted(detections):
        found = detections[frame_index]
        if not found:
            continue
        groups.append(f"frame {frame_index}: " + ", ".join(describe_detection(d) for d in found))
    return "{" + "; ".join(groups) + "}"


def format_captions(captions: Iterable[FrameCaption]) -> str:
    ordered = sorted(captions, key=lambda c: c.frame_index)
    return "; ".join(f"frame {c.frame_index}: {c.text}" for c in ordered)


def render_image_caption_prompt(templates: PromptTemplateSet | None = None) -> str:
    templates = templates if templates is not None else load_templates()
    return templates.image_caption


def render_clip_prompt(bundle: ClipInfo, templates: PromptTemplateSet | None = None) -> str:
    templates = templates if templates is not None else load_templates()
    action = getattr(bundle, "action", None)
    if action is None or not getattr(action, "label", ""):
        raise MissingFieldError("clip prompt requires an action label")
    values = {
        "<clip action>": action.label,
        "<object>": format_objects(bundle.detections),
        "<image caption>": format_captions(bundle.captions),
    }
    return _fill(templates.clip_description, values)


def _slot_text(texts: Sequence[str]) -> str:
    """Join one bucket's chapters; the template supplies the final period."""
    if not texts:
        return EMPTY_BUCKET_SENTINEL
    joined = " ".join(t.strip() for t in texts)
    return joined[:-1] if joined.endswith(".") else joined


def render_story_prompt(chapters: Sequence[ChapterInfo], templates: PromptTemplateSet | None = None) -> str:
    templates = templates if templates is not None else load_templates()
    if not chapters:
        raise EmptyInputError("story prompt requires at least one chapter")
    grouped: dict[str, list[str]] = {bucket: [] for bucket in TEMPORAL_BUCKETS}
    for chapter in chapters:
        if chapter.temporal_bucket not in grouped:
            raise RangeError(f"unknown temporal bucket {chapter.temporal_bucket!r}")
        grouped[chapter.temporal_bucket].append(chapter.text)
    values = {
        f"<clip description{i + 1}>": _slot_text(grouped[bucket])
        for i, bucket in enumerate(TEMPORAL_BUCKETS)
    }
    return _fill(templates.video_story, values)


def render_qa_prompt(video_info: str, question: str, templates: PromptTemplateSet | None = None) -> str:
    templates = templates if templates is not None else load_templates()
    if not video_info.strip():
        raise MissingFieldError("qa prompt requires video info")
    if not question.strip():
        raise MissingFieldError("qa prompt requires a question")
    return _fill(templates.video_qa, {"<video info>": video_info, "<question>": question})


def render_short_answer_prompt(question: str, long_answer: str, templates: PromptTemplateSet | None = None) -> str:
    templates = templates if templates is not None else load_templates()
    if not question.strip():
        raise MissingFieldError("short-answer prompt requires a question")
    if not long_answer.strip():
        raise MissingFieldError("short-answer prompt requires a long answer")
    return _fill(templates.short_answer, {"<question>": question, "<long answer>": long_answer})
