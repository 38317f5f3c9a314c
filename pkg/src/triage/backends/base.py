"""Scoring-backend abstraction: next-token scoring plus text completion.

Scores are natural-log probabilities normalized over the backend's full
vocabulary, so a decoded sequence's score (sum of per-step log-probs) is
backend-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence, runtime_checkable


@runtime_checkable
class TokenizerHandle(Protocol):
    """Immutable, shareable tokenizer exposed by a backend."""

    name: str

    def tokenize(self, text: str) -> list[int]: ...

    def detokenize(self, ids: Sequence[int]) -> str: ...


@dataclass(frozen=True)
class ScoreRequest:
    context: list[int]
    candidates: list[int]


@dataclass(frozen=True)
class ScoreResponse:
    logprobs: list[float]


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    max_new_tokens: int
    stop: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    truncated: bool = False


@runtime_checkable
class ScoringBackend(Protocol):
    """What the decoder needs from a model: scoring, completion, a tokenizer."""

    tokenizer: TokenizerHandle
    eot_token_id: int

    def score(self, context: Sequence[int], candidates: Sequence[int]) -> list[float]: ...

    def complete(self, prompt: str, max_new_tokens: int, stop: Sequence[str]) -> CompletionResponse: ...


def trim_at_stop(text: str, stop: Sequence[str]) -> str:
    """Cut text at the earliest occurrence of any stop string."""
    cut = len(text)
    for s in stop:
        idx = text.find(s)
        if idx != -1:
            cut = min(cut, idx)
    return text[:cut]
