"""Serve any in-process backend over the wire protocol (stdlib only)."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .base import ScoringBackend


def _make_handler(backend: ScoringBackend):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet
            pass

        def _reply(self, status: int, payload: dict) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_POST(self) -> None:
            length = int(self.headers.get("Content-Length", 0))
            try:
                body = json.loads(self.rfile.read(length))
            except json.JSONDecodeError:
                self._reply(400, {"error": "invalid JSON body"})
                return
            if self.path == "/v1/score":
                logprobs = backend.score(body["context"], body["candidates"])
                self._reply(200, {"logprobs": logprobs})
            elif self.path == "/v1/complete":
                resp = backend.complete(
                    body["prompt"], body["max_new_tokens"], body.get("stop", [])
                )
                self._reply(200, {"text": resp.text})
            else:
                self._reply(404, {"error": f"unknown path {self.path}"})

        def do_GET(self) -> None:
            url = urlparse(self.path)
            query = parse_qs(url.query)
            if url.path == "/v1/tokenize":
                text = query.get("s", [""])[0]
                self._reply(200, {"ids": backend.tokenizer.tokenize(text)})
            elif url.path == "/v1/detokenize":
                ids = [int(v) for v in query.get("ids", [""])[0].split(",") if v]
                self._reply(200, {"text": backend.tokenizer.detokenize(ids)})
            else:
                self._reply(404, {"error": f"unknown path {url.path}"})

    return Handler


class BackendServer:
    """Threaded HTTP server wrapping a backend; use as a context manager."""

    def __init__(self, backend: ScoringBackend, host: str = "127.0.0.1", port: int = 0):
        self._server = ThreadingHTTPServer((host, port), _make_handler(backend))
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "BackendServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "BackendServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
