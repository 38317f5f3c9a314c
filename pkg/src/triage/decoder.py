"""Ranked Top-K assignee prediction.

Two routes produce a RankedPrediction: trie-constrained beam search over a
scoring backend, or post-processing of a free-form completion. Either way
every non-PAD entry is a roster member, entries are unique, and the list
is padded to exactly k.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .backends.base import ScoringBackend
from .errors import EmptyTrie, MalformedLine
from .prompts import PromptBundle
from .roster import Roster, validate_identifier
from .trie import TokenTrie, TrieNode

logger = logging.getLogger(__name__)

MODE_CONSTRAINED = "constrained"
MODE_FREE = "free_postprocessed"

_SPLIT_RE = re.compile(r"[\s,]+")


@dataclass(frozen=True)
class BeamConfig:
    """Beam-search knobs. Ties always break lexicographically ascending."""

    k: int = 10
    beam_width: int | None = None  # defaults to 2*k

    def __post_init__(self) -> None:
        if self.beam_width is not None and self.beam_width < self.k:
            raise ValueError("beam_width must be >= k")

    @property
    def width(self) -> int:
        return self.beam_width if self.beam_width is not None else 2 * self.k


@dataclass(frozen=True)
class RankedPrediction:
    """Ordered list of exactly k entries; PAD (None) only as a suffix."""

    issue_id: str
    entries: tuple[tuple[str | None, float | None], ...]
    k: int
    mode: str
    warning: str | None = None

    def identifiers(self) -> list[str | None]:
        return [ident for ident, _ in self.entries]

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "issue_id": self.issue_id,
                "mode": self.mode,
                "predictions": [ident for ident, _ in self.entries],
                "scores": [score for _, score in self.entries],
            },
            ensure_ascii=False,
        )


def _pad_entries(
    ranked: Sequence[tuple[str, float | None]], k: int
) -> tuple[tuple[str | None, float | None], ...]:
    entries: list[tuple[str | None, float | None]] = list(ranked[:k])
    entries.extend((None, None) for _ in range(k - len(entries)))
    return tuple(entries)


@dataclass
class _Hypothesis:
    node: TrieNode
    tokens: tuple[int, ...]
    score: float


def rank_constrained(
    prompt: PromptBundle,
    trie: TokenTrie,
    backend: ScoringBackend,
    cfg: BeamConfig = BeamConfig(),
) -> RankedPrediction:
    """Trie-constrained beam search over the backend's next-token scores.

    At every step the only candidates offered to the backend are the trie
    children of the current node. A terminal that still has children (one
    identifier is a token-prefix of another) completes through an explicit
    stop decision scored with the backend's end-of-text token; a terminal
    leaf completes as-is. Sequence score is the plain sum of per-step
    log-probs, no length normalization.
    """
    if trie.is_empty():
        raise EmptyTrie()
    context = backend.tokenizer.tokenize(prompt.text)
    completed: dict[str, float] = {}
    beam: list[_Hypothesis] = [_Hypothesis(trie.root, (), 0.0)]

    while beam:
        expansions: list[_Hypothesis] = []
        for hyp in beam:
            children = sorted(hyp.node.children.items())
            terminal = hyp.node.terminal
            if terminal is not None and not children:
                _register(completed, terminal, hyp.score)
                continue
            candidates = [tok for tok, _ in children]
            if terminal is not None:
                candidates.append(backend.eot_token_id)
            logprobs = backend.score(list(context) + list(hyp.tokens), candidates)
            if terminal is not None:
                _register(completed, terminal, hyp.score + logprobs[-1])
                logprobs = logprobs[:-1]
            for (tok, child), lp in zip(children, logprobs):
                expansions.append(_Hypothesis(child, hyp.tokens + (tok,), hyp.score + lp))
        if len(expansions) > cfg.width:
            expansions.sort(key=lambda h: (-h.score, h.tokens))
            expansions = expansions[: cfg.width]
        beam = expansions

    ranked = sorted(completed.items(), key=lambda item: (-item[1], item[0]))
    return RankedPrediction(
        issue_id=prompt.issue_id,
        entries=_pad_entries(ranked, cfg.k),
        k=cfg.k,
        mode=MODE_CONSTRAINED,
    )


def _register(completed: dict[str, float], identifier: str, score: float) -> None:
    if identifier not in completed or score > completed[identifier]:
        completed[identifier] = score


def enumerate_ranking(
    prompt: PromptBundle,
    trie: TokenTrie,
    backend: ScoringBackend,
    k: int,
) -> RankedPrediction:
    """Exhaustively score every roster member along its trie path.

    Independent of the beam machinery; used as the ground-truth ordering
    for small rosters.
    """
    if trie.is_empty():
        raise EmptyTrie()
    context = backend.tokenizer.tokenize(prompt.text)
    paths = dict(trie.terminals())
    prefix_paths = {
        path for path in paths if any(other != path and other[: len(path)] == path for other in paths)
    }
    scores: dict[str, float] = {}
    for path, member in paths.items():
        total = 0.0
        for i, tok in enumerate(path):
            total += backend.score(list(context) + list(path[:i]), [tok])[0]
        if path in prefix_paths:
            total += backend.score(list(context) + list(path), [backend.eot_token_id])[0]
        scores[member] = total
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return RankedPrediction(
        issue_id=prompt.issue_id,
        entries=_pad_entries(ranked, k),
        k=k,
        mode=MODE_CONSTRAINED,
    )


def free_decode(prompt: PromptBundle, backend: ScoringBackend, max_new_tokens: int = 64) -> str:
    """One free-form completion for a top1/topk prompt; raw text back."""
    if prompt.kind not in ("top1", "topk"):
        raise ValueError(f"free_decode expects an inference prompt, got kind {prompt.kind!r}")
    resp = backend.complete(prompt.text, max_new_tokens, stop=["\n\n", "###"])
    if resp.truncated:
        logger.warning("completion for issue %s hit max_new_tokens=%d", prompt.issue_id, max_new_tokens)
    return resp.text


def postprocess_topk(raw: str, roster: Roster, k: int, issue_id: str = "") -> RankedPrediction:
    """Validate, roster-filter, dedup, and pad a free-form completion."""
    seen: dict[str, None] = {}
    for piece in _SPLIT_RE.split(raw):
        if not piece:
            continue
        ident = piece.strip().lower()
        if validate_identifier(ident) and ident in roster:
            seen.setdefault(ident, None)
    kept = list(seen)[:k]
    warning = None
    if not kept:
        warning = "no valid roster identifiers in completion"
    return RankedPrediction(
        issue_id=issue_id,
        entries=_pad_entries([(ident, None) for ident in kept], k),
        k=k,
        mode=MODE_FREE,
        warning=warning,
    )


def extract_top1(raw: str, anchor: str = "### Assignee:") -> str | None:
    """Identifier after the last anchor occurrence, or None if absent/invalid.

    Text without any anchor falls back to its first whitespace-delimited
    token, so scaffold-dropping completions still get a chance.
    """
    idx = raw.rfind(anchor)
    tail = raw[idx + len(anchor):] if idx != -1 else raw
    tokens = tail.split()
    if not tokens:
        return None
    ident = tokens[0].strip().lower()
    return ident if validate_identifier(ident) else None


def top1_prediction(raw: str, roster: Roster, k: int, issue_id: str, anchor: str = "### Assignee:") -> RankedPrediction:
    """RankedPrediction from a Top-1 style completion (rank 1 or all-PAD)."""
    ident = extract_top1(raw, anchor)
    kept = [(ident, None)] if ident is not None and ident in roster else []
    warning = None if kept else "no valid roster identifier after anchor"
    return RankedPrediction(
        issue_id=issue_id,
        entries=_pad_entries(kept, k),
        k=k,
        mode=MODE_FREE,
        warning=warning,
    )


def write_predictions(preds: Iterable[RankedPrediction], path: str | Path) -> int:
    count = 0
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for pred in preds:
            fh.write(pred.to_json_line() + "\n")
            count += 1
    return count


def read_predictions(path: str | Path) -> list[RankedPrediction]:
    preds = []
    with Path(path).open(encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(i, exc.msg) from exc
            missing = {"issue_id", "mode", "predictions", "scores"} - set(obj)
            if missing:
                raise MalformedLine(i, f"prediction record missing keys {sorted(missing)}")
            entries = tuple(zip(obj["predictions"], obj["scores"]))
            preds.append(
                RankedPrediction(
                    issue_id=obj["issue_id"],
                    entries=entries,
                    k=len(entries),
                    mode=obj["mode"],
                )
            )
    return preds
