"""Strict conversational-JSONL parsing and anchor-masked example building.

Each (system, user, assistant) record becomes one training sequence:
the instruction scaffold plus the issue text, the "### Assignee: " anchor,
then the assignee identifier and EOS. Labels are -100 everywhere up to and
including the anchor, so loss is computed only on the identifier tokens.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import torch

from .errors import DataFormatError
from .tokenizer import ByteLevelTokenizer, EOS_TOKEN_ID, PAD_TOKEN_ID

ROLES = ("system", "user", "assistant")
ANCHOR = "### Assignee:"

PROMPT_PREFIX = "Below is an issue. Suggest the single best developer to resolve it.\n\n### Issue:\n"
PROMPT_SUFFIX = f"\n\n{ANCHOR} "

IGNORE_INDEX = -100


@dataclass(frozen=True)
class Record:
    system: str
    user: str
    assistant: str


@dataclass(frozen=True)
class Example:
    input_ids: list[int]
    labels: list[int]  # IGNORE_INDEX over the prompt region

    def prompt_length(self) -> int:
        return sum(1 for l in self.labels if l == IGNORE_INDEX)


def load_records(path: str | Path) -> list[Record]:
    """Parse the shaped JSONL strictly; bad lines carry their line number."""
    records = []
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    while lines and not lines[-1].strip():
        lines.pop()
    for i, line in enumerate(lines, start=1):
        if not line.strip():
            raise DataFormatError(i, "blank line inside the file")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataFormatError(i, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(obj, dict) or set(obj) != set(ROLES):
            raise DataFormatError(i, f"record must have exactly the keys {list(ROLES)}")
        if not all(isinstance(obj[r], str) for r in ROLES):
            raise DataFormatError(i, "all roles must be strings")
        if not obj["assistant"].strip():
            raise DataFormatError(i, "assistant label is empty")
        records.append(Record(system=obj["system"], user=obj["user"], assistant=obj["assistant"]))
    if not records:
        raise DataFormatError(0, "no records in file")
    return records


def build_example(record: Record, tokenizer: ByteLevelTokenizer, seq_len: int) -> Example:
    """Tokenize one record, trimming the issue tail if the budget demands."""
    target = tokenizer.tokenize(record.assistant) + [EOS_TOKEN_ID]
    scaffold = tokenizer.tokenize(PROMPT_PREFIX) + tokenizer.tokenize(PROMPT_SUFFIX)
    budget_for_user = seq_len - len(target) - len(scaffold)
    if budget_for_user < 0:
        raise DataFormatError(0, f"scaffold and label alone exceed seq_len={seq_len}")
    user = record.user
    user_ids = tokenizer.tokenize(user)
    if len(user_ids) > budget_for_user:
        user_ids = user_ids[:budget_for_user]
    prompt_ids = tokenizer.tokenize(PROMPT_PREFIX) + user_ids + tokenizer.tokenize(PROMPT_SUFFIX)
    input_ids = prompt_ids + target
    labels = [IGNORE_INDEX] * len(prompt_ids) + list(target)
    return Example(input_ids=input_ids, labels=labels)


def collate(examples: Sequence[Example]) -> dict[str, torch.Tensor]:
    """Right-pad a batch; padding positions carry no loss and no attention."""
    width = max(len(ex.input_ids) for ex in examples)
    input_ids = torch.full((len(examples), width), PAD_TOKEN_ID, dtype=torch.long)
    labels = torch.full((len(examples), width), IGNORE_INDEX, dtype=torch.long)
    attention = torch.zeros((len(examples), width), dtype=torch.long)
    for row, ex in enumerate(examples):
        n = len(ex.input_ids)
        input_ids[row, :n] = torch.tensor(ex.input_ids, dtype=torch.long)
        labels[row, :n] = torch.tensor(ex.labels, dtype=torch.long)
        attention[row, :n] = 1
    return {"input_ids": input_ids, "labels": labels, "attention_mask": attention}
