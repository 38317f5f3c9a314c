"""HTTP client for the model-server wire protocol.

POST /v1/score    {"context":[int...],"candidates":[int...]} -> {"logprobs":[float...]}
POST /v1/complete {"prompt":str,"max_new_tokens":int,"stop":[str...]} -> {"text":str}
GET  /v1/tokenize?s=...                                      -> {"ids":[int...]}

/score is idempotent and retried with exponential backoff; /complete is
never retried once a request has gone out.
"""

from __future__ import annotations

import os
import threading
import time
from typing import Sequence

import requests

from ..errors import HttpError, ProtocolError, RequestTimeout
from .base import CompletionResponse

ENDPOINT_ENV_VAR = "TRIAGE_ENDPOINT"

_RETRYABLE = {429, 500, 502, 503, 504}


def endpoint_from_env(default: str | None = None) -> str | None:
    return os.environ.get(ENDPOINT_ENV_VAR, default)


class HttpTokenizer:
    def __init__(self, endpoint: str, session: requests.Session, timeout: float):
        self.name = f"http:{endpoint}"
        self._endpoint = endpoint.rstrip("/")
        self._session = session
        self._timeout = timeout

    def tokenize(self, text: str) -> list[int]:
        try:
            resp = self._session.get(
                f"{self._endpoint}/v1/tokenize", params={"s": text}, timeout=self._timeout
            )
        except requests.Timeout as exc:
            raise RequestTimeout("/v1/tokenize") from exc
        if resp.status_code != 200:
            raise HttpError(resp.status_code)
        ids = _json_field(resp, "ids")
        if not isinstance(ids, list) or not all(isinstance(i, int) for i in ids):
            raise ProtocolError("tokenize ids must be a list of integers")
        return ids

    def detokenize(self, ids: Sequence[int]) -> str:
        # Optional extension endpoint; the core pipeline never needs it.
        resp = self._session.get(
            f"{self._endpoint}/v1/detokenize",
            params={"ids": ",".join(str(i) for i in ids)},
            timeout=self._timeout,
        )
        if resp.status_code != 200:
            raise ProtocolError(f"detokenize unsupported by server (HTTP {resp.status_code})")
        return str(_json_field(resp, "text"))


class HttpBackend:
    """Client for a remote scoring server; bounds in-flight requests."""

    def __init__(
        self,
        endpoint: str,
        *,
        eot_token_id: int = 0,
        timeout: float = 30.0,
        max_retries: int = 3,
        backoff: float = 0.5,
        in_flight_cap: int = 8,
        session: requests.Session | None = None,
    ):
        self._endpoint = endpoint.rstrip("/")
        self._timeout = timeout
        self._max_retries = max_retries
        self._backoff = backoff
        self._session = session or requests.Session()
        self._slots = threading.Semaphore(in_flight_cap)
        self.eot_token_id = eot_token_id
        self.tokenizer = HttpTokenizer(self._endpoint, self._session, timeout)

    def score(self, context: Sequence[int], candidates: Sequence[int]) -> list[float]:
        body = {"context": list(context), "candidates": list(candidates)}
        last_exc: Exception | None = None
        for attempt in range(self._max_retries + 1):
            if attempt:
                time.sleep(self._backoff * 2 ** (attempt - 1))
            try:
                with self._slots:
                    resp = self._session.post(
                        f"{self._endpoint}/v1/score", json=body, timeout=self._timeout
                    )
            except requests.Timeout as exc:
                last_exc = RequestTimeout("/v1/score")
                last_exc.__cause__ = exc
                continue
            except requests.RequestException as exc:
                last_exc = HttpError(0, str(exc))
                last_exc.__cause__ = exc
                continue
            if resp.status_code in _RETRYABLE:
                last_exc = HttpError(resp.status_code)
                continue
            if resp.status_code != 200:
                raise HttpError(resp.status_code)
            logprobs = _json_field(resp, "logprobs")
            if not isinstance(logprobs, list) or len(logprobs) != len(candidates):
                raise ProtocolError(
                    f"expected {len(candidates)} logprobs, got "
                    f"{len(logprobs) if isinstance(logprobs, list) else type(logprobs).__name__}"
                )
            values = [float(v) for v in logprobs]
            if any(v > 0 for v in values):
                raise ProtocolError("logprobs must be <= 0")
            return values
        raise last_exc  # type: ignore[misc]

    def complete(self, prompt: str, max_new_tokens: int, stop: Sequence[str] = ()) -> CompletionResponse:
        body = {"prompt": prompt, "max_new_tokens": max_new_tokens, "stop": list(stop)}
        try:
            with self._slots:
                resp = self._session.post(
                    f"{self._endpoint}/v1/complete", json=body, timeout=self._timeout
                )
        except requests.Timeout as exc:
            raise RequestTimeout("/v1/complete") from exc
        if resp.status_code != 200:
            raise HttpError(resp.status_code)
        payload = _json_payload(resp)
        if "text" not in payload:
            raise ProtocolError("complete response lacks 'text'")
        return CompletionResponse(
            text=str(payload["text"]), truncated=bool(payload.get("truncated", False))
        )


def _json_payload(resp: requests.Response) -> dict:
    try:
        payload = resp.json()
    except ValueError as exc:
        raise ProtocolError(f"response body is not JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ProtocolError("response body is not a JSON object")
    return payload


def _json_field(resp: requests.Response, key: str):
    payload = _json_payload(resp)
    if key not in payload:
        raise ProtocolError(f"response lacks {key!r}")
    return payload[key]
