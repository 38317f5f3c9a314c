"""The valid-assignee candidate set, built from training labels only."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import EmptyRoster
from .ingest import IssueRecord, normalize_identifier

# local@domain: 1+ dot-separated labels, final label at least 2 chars.
_EMAIL_RE = re.compile(r"^[a-z0-9._%+-]+@(?:[a-z0-9-]+\.)*[a-z0-9-]{2,}$")
# Bare handle: 2-64 chars, starts alphanumeric.
_HANDLE_RE = re.compile(r"^[a-z0-9][a-z0-9._-]{1,63}$")

# The Top-K pad sentinel must never validate as an identifier.
DENYLIST = frozenset({"none"})


def validate_identifier(s: str) -> bool:
    """True iff s is a well-formed, non-denylisted email or handle.

    Expects already-normalized input (lowercase, trimmed); uppercase or
    padded strings simply fail the match.
    """
    if s in DENYLIST:
        return False
    return bool(_EMAIL_RE.match(s) or _HANDLE_RE.match(s))


@dataclass(frozen=True)
class Roster:
    """Ordered, deduplicated set of valid assignee identifiers."""

    members: tuple[str, ...]
    source: str  # training_labels | official_list | union
    built_from_split: str = "train"

    def __post_init__(self) -> None:
        if not self.members:
            raise EmptyRoster()
        object.__setattr__(self, "_member_set", frozenset(self.members))

    def __contains__(self, identifier: str) -> bool:
        return identifier in self._member_set  # type: ignore[attr-defined]

    def __iter__(self) -> Iterator[str]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)


def build_roster(
    train: Sequence[IssueRecord],
    official: Iterable[str] | None = None,
    built_from_split: str = "train",
) -> Roster:
    """Collect distinct assignees in first-seen order; never reads other splits."""
    members: dict[str, None] = {}
    for rec in train:
        members.setdefault(normalize_identifier(rec.assignee), None)
    source = "training_labels"
    if official is not None:
        had_train = bool(members)
        for ident in official:
            members.setdefault(normalize_identifier(ident), None)
        source = "union" if had_train else "official_list"
    return Roster(members=tuple(members), source=source, built_from_split=built_from_split)


def save_roster(roster: Roster, path: str | Path) -> None:
    """One identifier per line; header comment records provenance."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# roster source={roster.source} split={roster.built_from_split}\n")
        for member in roster.members:
            fh.write(member + "\n")


def load_roster(path: str | Path) -> Roster:
    members: dict[str, None] = {}
    source = "training_labels"
    split = "train"
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for part in line[1:].split():
                if part.startswith("source="):
                    source = part.removeprefix("source=")
                elif part.startswith("split="):
                    split = part.removeprefix("split=")
            continue
        members.setdefault(normalize_identifier(line), None)
    return Roster(members=tuple(members), source=source, built_from_split=split)
