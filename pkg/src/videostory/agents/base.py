"""Capability interface every agent implementation satisfies.

``frame_index`` / ``clip_index`` hints exist so scripted test doubles can key
fixtures on them; live clients ignore the hints and work from the payload.
"""

from __future__ import annotations

from typing import Protocol, Sequence, runtime_checkable

from .types import ActionLabel, AgentConfig, Detection, FrameCaption, Vector


@runtime_checkable
class Agents(Protocol):
    config: AgentConfig

    def embed_image(self, image: bytes) -> Vector: ...

    def embed_text(self, text: str) -> Vector: ...

    def detect_objects(self, image: bytes, frame_index: int | None = None) -> list[Detection]: ...

    def recognize_action(self, frames: Sequence[bytes], clip_index: int | None = None) -> ActionLabel: ...

    def caption_frame(self, frame_index: int, image: bytes, prompt: str) -> FrameCaption: ...

    def complete(self, prompt: str) -> str: ...
