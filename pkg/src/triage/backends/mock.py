"""Deterministic in-process backend over a fixed 256-token byte vocabulary.

The mock is a pure function of (seed, context tail, candidate): the same
inputs give the same log-probs on any platform, which makes the whole
decode pipeline testable offline.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Sequence

import numpy as np

from .base import CompletionResponse, trim_at_stop

VOCAB_SIZE = 256
# Byte 0 never occurs in text, so it doubles as the end-of-text token.
EOT_TOKEN_ID = 0

_MASK = (1 << 64) - 1
_GOLD = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

_VOCAB_INPUT = np.arange(1, VOCAB_SIZE + 1, dtype=np.uint64)


class ByteTokenizer:
    """UTF-8 byte tokenizer: token ids are byte values 0..255."""

    name = "byte-256"

    def tokenize(self, text: str) -> list[int]:
        return list(text.encode("utf-8"))

    def detokenize(self, ids: Sequence[int]) -> str:
        return bytes(ids).decode("utf-8")


def _mix_scalar(x: int) -> int:
    x = (x + _GOLD) & _MASK
    x = ((x ^ (x >> 30)) * _M1) & _MASK
    x = ((x ^ (x >> 27)) * _M2) & _MASK
    return x ^ (x >> 31)


def _mix_array(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = x + np.uint64(_GOLD)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(_M1)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(_M2)
        return x ^ (x >> np.uint64(31))


def _tail_state(context: Sequence[int], seed: int) -> int:
    h = _mix_scalar(seed & _MASK)
    for tok in list(context)[-4:]:
        h = _mix_scalar(h ^ ((int(tok) + 1) & _MASK))
    return h


def _unit_interval(u: np.ndarray) -> np.ndarray:
    # 53 hash bits mapped to the open interval (0, 1).
    return ((u >> np.uint64(11)).astype(np.float64) + 0.5) / float(1 << 53)


def _raw_weights(state: int, tokens: np.ndarray) -> np.ndarray:
    return _unit_interval(_mix_array(np.uint64(state) ^ tokens))


def mock_score(context: Sequence[int], candidates: Sequence[int], seed: int) -> list[float]:
    """Log-probs for candidate next tokens, normalized over the byte vocabulary."""
    state = _tail_state(context, seed)
    log_z = float(np.log(np.sum(_raw_weights(state, _VOCAB_INPUT))))
    if not candidates:
        return []
    cand = np.asarray([int(c) + 1 for c in candidates], dtype=np.uint64)
    return (np.log(_raw_weights(state, cand)) - log_z).tolist()


def _argmax_token(context: Sequence[int], seed: int) -> int:
    state = _tail_state(context, seed)
    return int(np.argmax(_raw_weights(state, _VOCAB_INPUT)))


class MockBackend:
    """Referentially transparent backend; scores via the seeded byte hash."""

    def __init__(self, seed: int = 7):
        self.seed = seed
        self.tokenizer = ByteTokenizer()
        self.eot_token_id = EOT_TOKEN_ID

    def score(self, context: Sequence[int], candidates: Sequence[int]) -> list[float]:
        return mock_score(context, candidates, self.seed)

    def complete(self, prompt: str, max_new_tokens: int, stop: Sequence[str] = ()) -> CompletionResponse:
        context = self.tokenizer.tokenize(prompt)
        out: list[int] = []
        for _ in range(max_new_tokens):
            out.append(_argmax_token(context + out, self.seed))
            text = bytes(out).decode("utf-8", errors="ignore")
            for s in stop:
                if s in text:
                    return CompletionResponse(text=trim_at_stop(text, stop))
        return CompletionResponse(text=bytes(out).decode("utf-8", errors="ignore"), truncated=True)


class ScriptedBackend:
    """Backend with canned completions, for exercising the free-decode path."""

    def __init__(self, completions: Iterable[CompletionResponse | str] = (), seed: int = 0):
        self._queue = deque(
            c if isinstance(c, CompletionResponse) else CompletionResponse(text=c)
            for c in completions
        )
        self.seed = seed
        self.tokenizer = ByteTokenizer()
        self.eot_token_id = EOT_TOKEN_ID

    def score(self, context: Sequence[int], candidates: Sequence[int]) -> list[float]:
        return mock_score(context, candidates, self.seed)

    def complete(self, prompt: str, max_new_tokens: int, stop: Sequence[str] = ()) -> CompletionResponse:
        if not self._queue:
            raise RuntimeError("scripted backend exhausted")
        resp = self._queue.popleft()
        return CompletionResponse(text=trim_at_stop(resp.text, stop), truncated=resp.truncated)
