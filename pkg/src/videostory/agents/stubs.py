"""Deterministic in-process agents for offline runs and tests.

Every response is a pure function of (seed, input payload), derived by
counter-mode expansion of a blake2b hash, so repeated runs on any platform
produce identical bytes. Scripted fixtures take precedence over the seeded
fallbacks, which lets tests pin exact captions, actions, detections, or chat
completions for chosen frames and prompts.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import EmptyResponseError
from .types import (
    ActionLabel,
    AgentConfig,
    Detection,
    FrameCaption,
    Vector,
    filter_detections,
    truncate_completion,
    validate_embedding,
)

_SUBJECTS = (
    "a man",
    "a woman",
    "a child",
    "two people",
    "a dog",
    "a cyclist",
    "a group of friends",
    "an athlete",
)

_VERBS = (
    "walks along",
    "paddles past",
    "rides near",
    "stands beside",
    "runs toward",
    "sits near",
    "plays close to",
    "moves around",
)

_PLACES = (
    "a rocky shore",
    "a busy street",
    "a quiet park",
    "a sandy beach",
    "a wooden pier",
    "a grassy hill",
    "an old bridge",
    "a market square",
)

_DETAILS = (
    "under a clear sky",
    "in the late afternoon",
    "while others watch",
    "holding a red bag",
    "with trees in the background",
    "as the light fades",
    "next to parked cars",
    "in light rain",
)

_ACTIONS = (
    "kayaking",
    "surfing water",
    "riding a bike",
    "playing guitar",
    "cooking on a campfire",
    "walking a dog",
    "rock climbing",
    "playing basketball",
)


def _hash_stream(parts: Sequence[bytes], nbytes: int) -> bytes:
    """Expand a keyed blake2b digest to ``nbytes`` via block counters."""
    root = hashlib.blake2b(digest_size=32)
    for part in parts:
        root.update(len(part).to_bytes(8, "big"))
        root.update(part)
    key = root.digest()
    out = bytearray()
    counter = 0
    while len(out) < nbytes:
        block = hashlib.blake2b(key, digest_size=32, salt=counter.to_bytes(8, "big"))
        out.extend(block.digest())
        counter += 1
    return bytes(out[:nbytes])


def _hash_uniforms(parts: Sequence[bytes], count: int) -> list[float]:
    """``count`` floats in [0, 1) from the expanded stream, 4 bytes each."""
    raw = _hash_stream(parts, count * 4)
    return [int.from_bytes(raw[4 * i : 4 * i + 4], "big") / 2**32 for i in range(count)]


def _parts(seed: int, kind: str, *payload: bytes) -> list[bytes]:
    return [str(seed).encode("ascii"), kind.encode("ascii"), *payload]


def _unit_vector(parts: Sequence[bytes], dim: int) -> list[float]:
    values = [2.0 * u - 1.0 for u in _hash_uniforms(parts, dim)]
    norm = math.sqrt(math.fsum(v * v for v in values))
    if norm == 0.0:
        # Probability ~0, but a zero vector would defeat cosine scoring.
        values[0] = 1.0
        norm = 1.0
    return [v / norm for v in values]


def _pick(u: float, options: Sequence[str]) -> str:
    return options[min(int(u * len(options)), len(options) - 1)]


@dataclass
class ScriptedFixtures:
    """Pinned responses that take precedence over seeded fallbacks.

    ``completions`` keys are matched against the exact prompt first, then
    against its sha256 hexdigest, so long prompts can be scripted without
    embedding them verbatim in fixture files.
    """

    completions: dict[str, str] = field(default_factory=dict)
    captions: dict[int, str] = field(default_factory=dict)
    actions: dict[int, ActionLabel] = field(default_factory=dict)
    detections: dict[int, list[Detection]] = field(default_factory=dict)


class StubAgents:
    """Offline implementation of the full capability set."""

    def __init__(
        self,
        config: AgentConfig | None = None,
        *,
        seed: int = 0,
        fixtures: ScriptedFixtures | None = None,
        service_dim: int | None = None,
    ) -> None:
        self.config = config if config is not None else AgentConfig()
        self.seed = seed
        self.fixtures = fixtures if fixtures is not None else ScriptedFixtures()
        # Dimension the fake service emits; leaving it at the configured
        # value keeps responses valid, overriding it exercises the
        # dimension check exactly like a misconfigured live endpoint.
        self._service_dim = service_dim if service_dim is not None else self.config.embed_dim

    def embed_image(self, image: bytes) -> Vector:
        if not image:
            raise ValueError("embed_image requires nonempty image bytes")
        raw = _unit_vector(_parts(self.seed, "image", image), self._service_dim)
        return validate_embedding(raw, self.config.embed_dim)

    def embed_text(self, text: str) -> Vector:
        if not text:
            raise ValueError("embed_text requires nonempty text")
        raw = _unit_vector(_parts(self.seed, "text", text.encode("utf-8")), self._service_dim)
        return validate_embedding(raw, self.config.embed_dim)

    def detect_objects(self, image: bytes, frame_index: int | None = None) -> list[Detection]:
        if not image:
            raise ValueError("detect_objects requires nonempty image bytes")
        if frame_index is not None and frame_index in self.fixtures.detections:
            return filter_detections(self.fixtures.detections[frame_index], self.config)
        parts = _parts(self.seed, "detect", image)
        count = _hash_stream(parts, 1)[0] % 4
        found: list[Detection] = []
        if count:
            us = _hash_uniforms(parts, count * 6)
            for i in range(count):
                u_label, u_x, u_y, u_w, u_h, u_score = us[6 * i : 6 * i + 6]
                x_min = u_x * 0.6
                y_min = u_y * 0.6
                found.append(
                    Detection(
                        label=_pick(u_label, self.config.categories),
                        box=(
                            round(x_min, 6),
                            round(y_min, 6),
                            round(min(x_min + 0.05 + u_w * 0.3, 1.0), 6),
                            round(min(y_min + 0.05 + u_h * 0.3, 1.0), 6),
                        ),
                        score=round(u_score, 6),
                    )
                )
        return filter_detections(found, self.config)

    def recognize_action(self, frames: Sequence[bytes], clip_index: int | None = None) -> ActionLabel:
        if not frames:
            raise ValueError("recognize_action requires at least one frame")
        if clip_index is not None and clip_index in self.fixtures.actions:
            return self.fixtures.actions[clip_index]
        parts = _parts(self.seed, "action", *frames)
        u_label, u_score = _hash_uniforms(parts, 2)
        return ActionLabel(label=_pick(u_label, _ACTIONS), score=round(0.5 + 0.5 * u_score, 6))

    def caption_frame(self, frame_index: int, image: bytes, prompt: str) -> FrameCaption:
        if not image:
            raise ValueError("caption_frame requires nonempty image bytes")
        if not prompt:
            raise ValueError("caption_frame requires a nonempty prompt")
        text = self.fixtures.captions.get(frame_index)
        if text is None:
            parts = _parts(self.seed, "caption", image, prompt.encode("utf-8"))
            us = _hash_uniforms(parts, 4)
            text = (
                f"{_pick(us[0], _SUBJECTS)} {_pick(us[1], _VERBS)} "
                f"{_pick(us[2], _PLACES)} {_pick(us[3], _DETAILS)}."
            )
        if not text:
            raise EmptyResponseError(f"scripted caption for frame {frame_index} is empty")
        return FrameCaption(frame_index=frame_index, text=text)

    def complete(self, prompt: str) -> str:
        if not prompt:
            raise ValueError("complete requires a nonempty prompt")
        text = self.fixtures.completions.get(prompt)
        if text is None:
            digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()
            text = self.fixtures.completions.get(digest)
        if text is None:
            us = _hash_uniforms(_parts(self.seed, "complete", prompt.encode("utf-8")), 4)
            subject = _pick(us[0], _SUBJECTS)
            text = (
                f"{subject[0].upper()}{subject[1:]} {_pick(us[1], _VERBS)} "
                f"{_pick(us[2], _PLACES)} {_pick(us[3], _DETAILS)}."
            )
        if not text:
            raise EmptyResponseError("scripted completion is empty")
        return truncate_completion(text, self.config)
