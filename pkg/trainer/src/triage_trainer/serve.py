"""Serve a fine-tuned model behind the scoring wire protocol.

POST /v1/score    {"context":[int...],"candidates":[int...]} -> {"logprobs":[float...]}
POST /v1/complete {"prompt":str,"max_new_tokens":int,"stop":[str...]} -> {"text":str}
GET  /v1/tokenize?s=...                                      -> {"ids":[int...]}

Scores are log-softmax over the full vocabulary; /complete decodes greedily.
"""

from __future__ import annotations

import errno
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Sequence
from urllib.parse import parse_qs, urlparse

import torch

from .config import TrainConfig
from .errors import ModelLoadError, PortInUse
from .lora import apply_lora, load_adapter, read_adapter_config
from .model import load_base_model, load_tiny_base
from .tokenizer import ByteLevelTokenizer, EOS_TOKEN_ID


class ModelService:
    """Greedy decoding and full-vocabulary scoring over a loaded model."""

    def __init__(self, model: torch.nn.Module, tokenizer: ByteLevelTokenizer | None = None):
        self.model = model.eval()
        self.tokenizer = tokenizer or ByteLevelTokenizer()
        self._lock = threading.Lock()  # serialize forwards; handler threads share the model

    @classmethod
    def from_checkpoint(cls, adapter_dir: str | Path, seed: int | None = None) -> "ModelService":
        adapter_dir = Path(adapter_dir)
        config = read_adapter_config(adapter_dir)
        cfg = TrainConfig(
            base_model=config["base_model_name_or_path"],
            lora_r=config["r"],
            lora_alpha=config["lora_alpha"],
            lora_dropout=config["lora_dropout"],
            target_modules=tuple(config["target_modules"]),
            seed=seed if seed is not None else 3407,
        )
        if cfg.is_tiny():
            # the tiny base ships next to its checkpoints
            base_dir = adapter_dir.parent if not (adapter_dir / "base_model.pt").exists() else adapter_dir
            model = load_tiny_base(base_dir, cfg.seed)
        else:
            model = load_base_model(cfg)
        apply_lora(model, cfg)
        load_adapter(model, adapter_dir)
        return cls(model)

    @torch.no_grad()
    def score(self, context: Sequence[int], candidates: Sequence[int]) -> list[float]:
        ids = list(context) or [EOS_TOKEN_ID]
        with self._lock:
            logits = self.model(torch.tensor([ids], dtype=torch.long)).logits[0, -1]
        logprobs = torch.log_softmax(logits.float(), dim=-1)
        return [float(logprobs[c]) for c in candidates]

    @torch.no_grad()
    def complete(self, prompt: str, max_new_tokens: int, stop: Sequence[str]) -> dict:
        ids = self.tokenizer.tokenize(prompt) or [EOS_TOKEN_ID]
        generated: list[int] = []
        truncated = True
        for _ in range(max_new_tokens):
            with self._lock:
                logits = self.model(torch.tensor([ids + generated], dtype=torch.long)).logits[0, -1]
            token = int(torch.argmax(logits))
            if token == EOS_TOKEN_ID:
                truncated = False
                break
            generated.append(token)
            text = self.tokenizer.detokenize(generated)
            if any(s in text for s in stop):
                truncated = False
                break
        text = self.tokenizer.detokenize(generated)
        cut = min((text.find(s) for s in stop if s in text), default=len(text))
        return {"text": text[:cut], "truncated": truncated}


def _make_handler(service: ModelService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
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
                self._reply(200, {"logprobs": service.score(body["context"], body["candidates"])})
            elif self.path == "/v1/complete":
                result = service.complete(body["prompt"], body["max_new_tokens"],
                                          body.get("stop", []))
                self._reply(200, {"text": result["text"]})
            else:
                self._reply(404, {"error": f"unknown path {self.path}"})

        def do_GET(self) -> None:
            url = urlparse(self.path)
            query = parse_qs(url.query)
            if url.path == "/v1/tokenize":
                self._reply(200, {"ids": service.tokenizer.tokenize(query.get("s", [""])[0])})
            elif url.path == "/v1/detokenize":
                ids = [int(v) for v in query.get("ids", [""])[0].split(",") if v]
                self._reply(200, {"text": service.tokenizer.detokenize(ids)})
            else:
                self._reply(404, {"error": f"unknown path {url.path}"})

    return Handler


class TrainerServer:
    """Threaded HTTP server exposing a ModelService; context-manager friendly."""

    def __init__(self, service: ModelService, host: str = "127.0.0.1", port: int = 0):
        try:
            self._server = ThreadingHTTPServer((host, port), _make_handler(service))
        except OSError as exc:
            if exc.errno == errno.EADDRINUSE:
                raise PortInUse(port) from exc
            raise
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    def start(self) -> "TrainerServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "TrainerServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def serve(adapter_dir: str | Path, port: int, host: str = "127.0.0.1") -> TrainerServer:
    """Load a checkpoint and serve it; raises PortInUse / ModelLoadError."""
    service = ModelService.from_checkpoint(adapter_dir)
    return TrainerServer(service, host=host, port=port).start()
