"""In-process HTTP server implementing the agent wire protocol for tests.

Normal requests delegate to a deterministic StubAgents instance, so a live
client pointed here behaves like the stub itself. Tests can queue per-path
directives (errors, malformed bodies, slow responses) ahead of the default
behavior and read per-path request counters afterwards.
"""

from __future__ import annotations

import base64
import json
import threading
import time
from collections import Counter, defaultdict, deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any

from videostory.agents import AgentConfig, StubAgents


def _b64decode(value: str) -> bytes:
    return base64.b64decode(value.encode("ascii"))


class _Handler(BaseHTTPRequestHandler):
    # Quiet: BaseHTTPRequestHandler logs to stderr by default.
    def log_message(self, format: str, *args: Any) -> None:
        pass

    def do_POST(self) -> None:
        wire: "WireServer" = self.server.wire  # type: ignore[attr-defined]
        with wire.lock:
            wire.counters[self.path] += 1
            directive = wire.directives[self.path].popleft() if wire.directives[self.path] else None
        length = int(self.headers.get("Content-Length", "0"))
        try:
            body = json.loads(self.rfile.read(length).decode("utf-8")) if length else {}
        except json.JSONDecodeError:
            body = {}
        with wire.lock:
            wire.last_request[self.path] = body
            wire.last_headers[self.path] = dict(self.headers)

        if directive is not None:
            kind = directive["kind"]
            if kind == "close":
                self.connection.close()
                return
            if kind == "slow":
                time.sleep(directive["seconds"])
            elif kind == "error":
                self._send(directive.get("code", 500), json.dumps({"error": "injected"}))
                return
            elif kind == "garbage":
                self._send(200, "this is not json")
                return
            elif kind == "json":
                self._send(200, json.dumps(directive["body"]))
                return
            # "slow" falls through to the default behavior after the delay.

        try:
            payload = wire.handle(self.path, body)
        except KeyError as exc:
            self._send(400, json.dumps({"error": f"bad request: missing {exc}"}))
            return
        if payload is None:
            self._send(404, json.dumps({"error": f"no such endpoint {self.path}"}))
            return
        self._send(200, json.dumps(payload))

    def _send(self, status: int, body: str) -> None:
        data = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


class WireServer:
    """Loopback server; use as a context manager."""

    def __init__(self, agents: StubAgents | None = None) -> None:
        self.agents = agents if agents is not None else StubAgents(AgentConfig(), seed=0)
        self.counters: Counter[str] = Counter()
        self.directives: dict[str, deque[dict[str, Any]]] = defaultdict(deque)
        self.last_request: dict[str, dict[str, Any]] = {}
        self.last_headers: dict[str, dict[str, str]] = {}
        self.lock = threading.Lock()
        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
        self._httpd.wire = self  # type: ignore[attr-defined]
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def program(self, path: str, *directives: dict[str, Any]) -> None:
        """Queue responses consumed before the default behavior, FIFO."""
        with self.lock:
            self.directives[path].extend(directives)

    def reset(self) -> None:
        with self.lock:
            self.counters.clear()
            self.directives.clear()
            self.last_request.clear()
            self.last_headers.clear()

    def handle(self, path: str, body: dict[str, Any]) -> dict[str, Any] | None:
        if path == "/v1/embed_image":
            return {"embedding": list(self.agents.embed_image(_b64decode(body["image_b64"])))}
        if path == "/v1/embed_text":
            return {"embedding": list(self.agents.embed_text(body["text"]))}
        if path == "/v1/detect":
            found = self.agents.detect_objects(_b64decode(body["image_b64"]))
            return {
                "detections": [
                    {"label": d.label, "box": list(d.box), "score": d.score} for d in found
                ]
            }
        if path == "/v1/action":
            frames = [_b64decode(f) for f in body["frames_b64"]]
            action = self.agents.recognize_action(frames)
            return {"label": action.label, "score": action.score}
        if path == "/v1/caption":
            caption = self.agents.caption_frame(0, _b64decode(body["image_b64"]), body["prompt"])
            return {"text": caption.text}
        if path == "/v1/chat":
            return {"text": self.agents.complete(body["prompt"])}
        return None

    def __enter__(self) -> "WireServer":
        self._thread.start()
        return self

    def __exit__(self, *exc_info: object) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        self._thread.join(timeout=5)
