"""HTTP client for remote perception and language services.

One JSON POST per capability. Transport-level failures (connection errors,
timeouts, 5xx) are retried until ``retries`` extra attempts are exhausted;
malformed responses and 4xx statuses are protocol errors and never retried.
"""

from __future__ import annotations

import base64
from typing import Any, Sequence

import requests

from ..errors import EmptyResponseError, ProtocolError, TransportError
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


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


class HttpAgents:
    """Live implementation of the capability set over JSON/HTTP.

    Calls go through the requests module unless a session is injected, so a
    shared client instance is safe to use from multiple threads.
    """

    def __init__(self, config: AgentConfig | None = None, *, session: requests.Session | None = None) -> None:
        self.config = config if config is not None else AgentConfig()
        self._http = session if session is not None else requests

    def _post(self, capability: str, payload: dict[str, Any]) -> dict[str, Any]:
        url = self.config.endpoint(capability)
        headers = {"Content-Type": "application/json"}
        if self.config.bearer_token:
            headers["Authorization"] = f"Bearer {self.config.bearer_token}"
        attempts = self.config.retries + 1
        failure: str | None = None
        for _ in range(attempts):
            try:
                response = self._http.post(url, json=payload, headers=headers, timeout=self.config.timeout)
            except requests.RequestException as exc:
                failure = f"{type(exc).__name__}: {exc}"
                continue
            if response.status_code >= 500:
                failure = f"HTTP {response.status_code}"
                continue
            if response.status_code != 200:
                raise ProtocolError(f"{capability}: HTTP {response.status_code}: {response.text[:200]}")
            try:
                data = response.json()
            except ValueError as exc:
                raise ProtocolError(f"{capability}: response is not JSON: {exc}") from exc
            if not isinstance(data, dict):
                raise ProtocolError(f"{capability}: expected a JSON object, got {type(data).__name__}")
            return data
        raise TransportError(f"{capability}: {url} failed after {attempts} attempts ({failure})")

    @staticmethod
    def _field(capability: str, data: dict[str, Any], key: str) -> Any:
        if key not in data:
            raise ProtocolError(f"{capability}: response missing {key!r}")
        return data[key]

    def _embedding(self, capability: str, data: dict[str, Any]) -> Vector:
        values = self._field(capability, data, "embedding")
        if not isinstance(values, list) or not all(isinstance(v, (int, float)) for v in values):
            raise ProtocolError(f"{capability}: 'embedding' must be a list of numbers")
        return validate_embedding(values, self.config.embed_dim)

    def embed_image(self, image: bytes) -> Vector:
        if not image:
            raise ValueError("embed_image requires nonempty image bytes")
        data = self._post("embed_image", {"image_b64": _b64(image)})
        return self._embedding("embed_image", data)

    def embed_text(self, text: str) -> Vector:
        if not text:
            raise ValueError("embed_text requires nonempty text")
        data = self._post("embed_text", {"text": text})
        return self._embedding("embed_text", data)

    def detect_objects(self, image: bytes, frame_index: int | None = None) -> list[Detection]:
        if not image:
            raise ValueError("detect_objects requires nonempty image bytes")
        payload = {
            "image_b64": _b64(image),
            "categories": list(self.config.categories),
            "box_threshold": self.config.box_threshold,
            "text_threshold": self.config.text_threshold,
        }
        data = self._post("detect", payload)
        raw = self._field("detect", data, "detections")
        if not isinstance(raw, list):
            raise ProtocolError("detect: 'detections' must be a list")
        found: list[Detection] = []
        for item in raw:
            if not isinstance(item, dict):
                raise ProtocolError("detect: each detection must be an object")
            box = item.get("box")
            if not isinstance(box, list) or len(box) != 4 or not all(isinstance(v, (int, float)) for v in box):
                raise ProtocolError("detect: 'box' must be four numbers")
            label = item.get("label")
            score = item.get("score")
            if not isinstance(label, str) or not isinstance(score, (int, float)):
                raise ProtocolError("detect: detection needs a string 'label' and numeric 'score'")
            try:
                found.append(Detection(label=label, box=tuple(float(v) for v in box), score=float(score)))
            except ValueError as exc:
                raise ProtocolError(f"detect: invalid detection: {exc}") from exc
        return filter_detections(found, self.config)

    def recognize_action(self, frames: Sequence[bytes], clip_index: int | None = None) -> ActionLabel:
        if not frames:
            raise ValueError("recognize_action requires at least one frame")
        data = self._post("action", {"frames_b64": [_b64(f) for f in frames]})
        label = self._field("action", data, "label")
        score = self._field("action", data, "score")
        if not isinstance(label, str) or not isinstance(score, (int, float)):
            raise ProtocolError("action: needs a string 'label' and numeric 'score'")
        try:
            return ActionLabel(label=label, score=float(score))
        except ValueError as exc:
            raise ProtocolError(f"action: invalid response: {exc}") from exc

    def caption_frame(self, frame_index: int, image: bytes, prompt: str) -> FrameCaption:
        if not image:
            raise ValueError("caption_frame requires nonempty image bytes")
        if not prompt:
            raise ValueError("caption_frame requires a nonempty prompt")
        data = self._post("caption", {"image_b64": _b64(image), "prompt": prompt})
        text = self._field("caption", data, "text")
        if not isinstance(text, str):
            raise ProtocolError("caption: 'text' must be a string")
        if not text:
            raise EmptyResponseError(f"caption: empty text for frame {frame_index}")
        return FrameCaption(frame_index=frame_index, text=text)

    def complete(self, prompt: str) -> str:
        if not prompt:
            raise ValueError("complete requires a nonempty prompt")
        payload = {
            "prompt": prompt,
            "temperature": self.config.temperature,
            "repetition_penalty": self.config.repetition_penalty,
            "max_tokens": self.config.max_tokens,
        }
        data = self._post("chat", payload)
        text = self._field("chat", data, "text")
        if not isinstance(text, str):
            raise ProtocolError("chat: 'text' must be a string")
        if not text:
            raise EmptyResponseError("chat: empty completion")
        return truncate_completion(text, self.config)
