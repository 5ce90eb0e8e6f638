"""Frame pixel providers.

The engine never decodes video itself; it asks a provider for the encoded
bytes of a single frame. Providers only need to be deterministic: the same
(video_id, frame_index) must always yield the same bytes.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Protocol


class FrameProvider(Protocol):
    def frame_bytes(self, video_id: str, frame_index: int) -> bytes: ...


class SyntheticFrameProvider:
    """Deterministic pseudo-frames for stub runs.

    Emits 256 bytes derived from blake2b(video_id, frame_index). The payload
    is opaque to every consumer (stubs hash it, the wire protocol base64s
    it), so no image codec is involved and the bytes are stable across
    library versions.
    """

    def frame_bytes(self, video_id: str, frame_index: int) -> bytes:
        out = bytearray()
        counter = 0
        while len(out) < 256:
            h = hashlib.blake2b(
                f"frame|{video_id}|{frame_index}|{counter}".encode("utf-8"), digest_size=64
            )
            out.extend(h.digest())
            counter += 1
        return bytes(out[:256])


class DirectoryFrameProvider:
    """Reads real frames from ``root/frame_<index:06d>.png``."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def frame_bytes(self, video_id: str, frame_index: int) -> bytes:
        path = self.root / f"frame_{frame_index:06d}.png"
        return path.read_bytes()
