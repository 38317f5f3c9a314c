"""Render corpora into conversational JSONL records and inference prompts.

Three templates exist: sft (training, ends with the anchor plus the gold
assignee), top1 (inference, ends at the anchor), and topk (inference with
an embedded candidate list). When a rendered prompt exceeds the token
budget, the issue body is truncated from its tail; scaffold, title, gold
label, and candidate list are never truncated.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import BudgetTooSmall, CandidatesDoNotFit, MalformedLine, MissingRole
from .ingest import IssueRecord

if TYPE_CHECKING:
    from .backends.base import TokenizerHandle

SYSTEM_PROMPT = "You are an expert bug triager."
ANCHOR = "### Assignee:"
DEFAULT_BUDGET = 2048
DEFAULT_K = 10

ROLES = ("system", "user", "assistant")

_PLACEHOLDER_RE = re.compile(r"\{(\w+)\}")


@dataclass(frozen=True)
class ConversationRecord:
    """One (system, user, assistant) training triple."""

    system: str
    user: str
    assistant: str


@dataclass(frozen=True)
class PromptBundle:
    """A rendered prompt plus the metadata the decoder needs."""

    text: str
    kind: str  # sft | top1 | topk
    issue_id: str
    anchor: str = ANCHOR
    k: int | None = None
    candidates: tuple[str, ...] | None = None


def load_template(kind: str, template_dir: str | Path | None = None) -> str:
    if template_dir is not None:
        raw = (Path(template_dir) / f"{kind}.txt").read_text(encoding="utf-8")
    else:
        raw = resources.files("triage.templates").joinpath(f"{kind}.txt").read_text(encoding="utf-8")
    return raw.rstrip("\n")


def _fill(template: str, mapping: dict[str, str]) -> str:
    # Single pass over the template; placeholder-looking text inside the
    # substituted values is left untouched.
    return _PLACEHOLDER_RE.sub(lambda m: mapping.get(m.group(1), m.group(0)), template)


def topk_instruction(k: int) -> str:
    return f"Top {k} unique assignees, comma-separated, no extra words."


def _truncate_to_budget(
    template: str,
    fields: dict[str, str],
    issue: IssueRecord,
    budget: int,
    tokenizer: "TokenizerHandle",
) -> tuple[str, str]:
    """Fit the render into the budget by trimming the body tail.

    Returns (rendered_text, issue_slot). Raises BudgetTooSmall when even an
    empty body cannot fit.
    """

    def render(body: str) -> tuple[str, str]:
        slot = issue.title + "\n\n" + body
        return _fill(template, {**fields, "issue": slot}), slot

    def fits(body: str) -> bool:
        return len(tokenizer.tokenize(render(body)[0])) <= budget

    if fits(issue.body):
        return render(issue.body)
    if not fits(""):
        raise BudgetTooSmall(budget, len(tokenizer.tokenize(render("")[0])))

    lo, hi = 0, len(issue.body)  # fits(body[:lo]) holds, fits(body[:hi]) does not
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if fits(issue.body[:mid]):
            lo = mid
        else:
            hi = mid
    return render(issue.body[:lo])


def render_sft(
    issue: IssueRecord,
    gold: str,
    budget: int = DEFAULT_BUDGET,
    tokenizer: "TokenizerHandle | None" = None,
    template_dir: str | Path | None = None,
) -> PromptBundle:
    """Render the training prompt ending with "### Assignee: {gold}"."""
    if not gold:
        raise ValueError("gold assignee must be non-empty")
    tokenizer = _require_tokenizer(tokenizer)
    template = load_template("sft", template_dir)
    text, _ = _truncate_to_budget(template, {"gold": gold}, issue, budget, tokenizer)
    return PromptBundle(text=text, kind="sft", issue_id=issue.bug_id)


def render_top1(
    issue: IssueRecord,
    budget: int = DEFAULT_BUDGET,
    tokenizer: "TokenizerHandle | None" = None,
    template_dir: str | Path | None = None,
) -> PromptBundle:
    """Render the inference prompt ending exactly at the anchor."""
    tokenizer = _require_tokenizer(tokenizer)
    template = load_template("top1", template_dir)
    text, _ = _truncate_to_budget(template, {}, issue, budget, tokenizer)
    return PromptBundle(text=text, kind="top1", issue_id=issue.bug_id)


def render_topk(
    issue: IssueRecord,
    candidates: Sequence[str],
    k: int = DEFAULT_K,
    budget: int = DEFAULT_BUDGET,
    tokenizer: "TokenizerHandle | None" = None,
    template_dir: str | Path | None = None,
) -> PromptBundle:
    """Render the ranked-list prompt embedding the full candidate list.

    The candidate list is never silently shortened: if it cannot fit even
    with an empty body, CandidatesDoNotFit is raised.
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    if len(set(candidates)) != len(candidates):
        raise ValueError("candidates must be deduplicated")
    if k < 1:
        raise ValueError("k must be >= 1")
    tokenizer = _require_tokenizer(tokenizer)
    template = load_template("topk", template_dir)
    fields = {"candidates": ", ".join(candidates), "instruction": topk_instruction(k)}
    try:
        text, _ = _truncate_to_budget(template, fields, issue, budget, tokenizer)
    except BudgetTooSmall:
        bare = _fill(template, {**fields, "candidates": "", "issue": issue.title + "\n\n"})
        needed_bare = len(tokenizer.tokenize(bare))
        if needed_bare <= budget:
            full = _fill(template, {**fields, "issue": issue.title + "\n\n"})
            raise CandidatesDoNotFit(budget, len(tokenizer.tokenize(full))) from None
        raise
    return PromptBundle(
        text=text, kind="topk", issue_id=issue.bug_id, k=k, candidates=tuple(candidates)
    )


def shape_conversation(
    issue: IssueRecord,
    budget: int = DEFAULT_BUDGET,
    tokenizer: "TokenizerHandle | None" = None,
    template_dir: str | Path | None = None,
) -> ConversationRecord:
    """Build the (system, user, assistant) record, truncating like render_sft."""
    tokenizer = _require_tokenizer(tokenizer)
    template = load_template("sft", template_dir)
    _, slot = _truncate_to_budget(template, {"gold": issue.assignee}, issue, budget, tokenizer)
    return ConversationRecord(system=SYSTEM_PROMPT, user=slot, assistant=issue.assignee)


def _require_tokenizer(tokenizer: "TokenizerHandle | None") -> "TokenizerHandle":
    if tokenizer is None:
        from .backends.mock import ByteTokenizer

        return ByteTokenizer()
    return tokenizer


def emit_jsonl(records: Iterable[ConversationRecord], path: str | Path) -> int:
    """Write conversation records, one JSON object per line. Returns the count."""
    count = 0
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            obj = {"system": rec.system, "user": rec.user, "assistant": rec.assistant}
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
            count += 1
    return count


def parse_jsonl(path: str | Path) -> list[ConversationRecord]:
    """Strictly parse a conversation JSONL file.

    Trailing blank lines are tolerated; anything else malformed is an error
    carrying the offending line number.
    """
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    while lines and not lines[-1].strip():
        lines.pop()
    records = []
    for i, line in enumerate(lines, start=1):
        if not line.strip():
            raise MalformedLine(i, "blank line inside the file")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLine(i, exc.msg) from exc
        if not isinstance(obj, dict):
            raise MalformedLine(i, "record is not a JSON object")
        extra = set(obj) - set(ROLES)
        if extra:
            raise MalformedLine(i, f"unexpected top-level keys {sorted(extra)}")
        for role in ROLES:
            if role not in obj:
                raise MissingRole(i, role)
            if not isinstance(obj[role], str):
                raise MalformedLine(i, f"role {role!r} is not a string")
        records.append(ConversationRecord(system=obj["system"], user=obj["user"], assistant=obj["assistant"]))
    return records
