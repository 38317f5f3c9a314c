"""Load, normalize, filter, window, and split issue-tracker exports.

The canonical corpus format is JSONL of issue records, one object per line,
keys in fixed order (bug_id, title, body, assignee, resolved_at,
source_project), timestamps ISO-8601 UTC.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Mapping

from .errors import (
    DuplicateBugId,
    EmptyCorpus,
    EmptyIdentifier,
    EmptyIssue,
    InvalidWindow,
    MissingField,
    ParseError,
)

REQUIRED_FIELDS = ("bug_id", "summary", "description", "fixer", "priority", "status", "resolved_at")

CORPUS_KEYS = ("bug_id", "title", "body", "assignee", "resolved_at", "source_project")

KNOWN_PROJECTS = {"eclipsejdt": "EclipseJDT", "mozilla": "Mozilla"}

SEED_ENV_VAR = "TRIAGE_SEED"


def parse_timestamp(value: str | datetime) -> datetime:
    """Parse an ISO-8601 timestamp into an aware UTC datetime."""
    if isinstance(value, datetime):
        dt = value
    else:
        s = value.strip()
        if s.endswith(("Z", "z")):
            s = s[:-1] + "+00:00"
        dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def canonical_project(name: str) -> str:
    return KNOWN_PROJECTS.get(name.strip().lower(), name.strip() or "Other")


@dataclass(frozen=True)
class RawIssue:
    """One row of a tracker export, unnormalized."""

    bug_id: str
    summary: str
    description: str
    fixer: str
    priority: str
    status: str
    resolved_at: datetime
    extra: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class IssueRecord:
    """One normalized bug report with its gold assignee."""

    bug_id: str
    title: str
    body: str
    assignee: str
    resolved_at: datetime
    source_project: str = "Other"


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.8
    validation_fraction: float = 0.1
    test_fraction: float = 0.1
    seed: int = 3407

    def __post_init__(self) -> None:
        total = self.train_fraction + self.validation_fraction + self.test_fraction
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"split fractions must sum to 1.0, got {total}")


@dataclass(frozen=True)
class DatasetStats:
    bugs: int
    developers: int
    relationships: int
    density: float

    def density_display(self) -> Decimal:
        """Density rounded half-up to 4 decimal places, as reported."""
        return (Decimal(self.relationships) / Decimal(self.bugs * self.developers)).quantize(
            Decimal("0.0001"), rounding=ROUND_HALF_UP
        )


def normalize_identifier(raw: str) -> str:
    """Trim and lowercase a developer identifier. No alias merging."""
    value = raw.strip().lower()
    if not value:
        raise EmptyIdentifier()
    return value


def normalize_issue(raw: RawIssue, project: str = "Other") -> IssueRecord:
    """Turn a RawIssue into an IssueRecord; rejects issues with no text at all."""
    title = raw.summary.strip()
    body = raw.description.strip()
    if not title and not body:
        raise EmptyIssue(raw.bug_id)
    if not title:
        # No summary in the export; promote the first body line so the
        # title-non-empty invariant holds.
        title = body.splitlines()[0][:80].strip()
    return IssueRecord(
        bug_id=raw.bug_id,
        title=title,
        body=body,
        assignee=normalize_identifier(raw.fixer),
        resolved_at=parse_timestamp(raw.resolved_at),
        source_project=canonical_project(project),
    )


def normalize_issues(raws: Iterable[RawIssue], project: str = "Other") -> tuple[list[IssueRecord], int]:
    """Normalize a batch, dropping empty issues. Returns (records, dropped)."""
    records: list[IssueRecord] = []
    dropped = 0
    for raw in raws:
        try:
            records.append(normalize_issue(raw, project))
        except EmptyIssue:
            dropped += 1
    return records, dropped


def _raw_from_mapping(obj: Mapping[str, object], row: int) -> RawIssue:
    for key in REQUIRED_FIELDS:
        if key not in obj or obj[key] is None:
            raise MissingField(row, key)
    bug_id = str(obj["bug_id"]).strip()
    fixer = str(obj["fixer"]).strip()
    if not bug_id:
        raise MissingField(row, "bug_id")
    if not fixer:
        raise MissingField(row, "fixer")
    try:
        resolved = parse_timestamp(str(obj["resolved_at"]))
    except ValueError as exc:
        raise ParseError(row, f"bad resolved_at: {exc}") from exc
    extra = {k: str(v) for k, v in obj.items() if k not in REQUIRED_FIELDS}
    return RawIssue(
        bug_id=bug_id,
        summary=str(obj["summary"]),
        description=str(obj["description"]),
        fixer=fixer,
        priority=str(obj["priority"]),
        status=str(obj["status"]),
        resolved_at=resolved,
        extra=extra,
    )


def load_export(path: str | Path, format: str) -> list[RawIssue]:
    """Load a CSV / JSON-array / JSONL tracker export into RawIssues, in file order."""
    path = Path(path)
    if format == "csv":
        rows = _load_csv(path)
    elif format == "json":
        rows = _load_json(path)
    elif format == "jsonl":
        rows = _load_jsonl(path)
    else:
        raise ValueError(f"unknown export format {format!r}")

    seen: set[str] = set()
    for raw in rows:
        if raw.bug_id in seen:
            raise DuplicateBugId(raw.bug_id)
        seen.add(raw.bug_id)
    return rows


def _load_csv(path: Path) -> list[RawIssue]:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for key in REQUIRED_FIELDS:
            if key not in header:
                raise MissingField(0, key)
        rows = []
        for i, rec in enumerate(reader, start=1):
            if None in rec:
                del rec[None]  # overflow cells from ragged rows
            rows.append(_raw_from_mapping({k: (v if v is not None else "") for k, v in rec.items()}, i))
    return rows


def _load_json(path: Path) -> list[RawIssue]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.lineno, exc.msg) from exc
    if not isinstance(data, list):
        raise ParseError(1, "expected a top-level JSON array")
    rows = []
    for i, obj in enumerate(data, start=1):
        if not isinstance(obj, dict):
            raise ParseError(i, "array element is not an object")
        rows.append(_raw_from_mapping(obj, i))
    return rows


def _load_jsonl(path: Path) -> list[RawIssue]:
    rows = []
    with path.open(encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(i, exc.msg) from exc
            if not isinstance(obj, dict):
                raise ParseError(i, "line is not a JSON object")
            rows.append(_raw_from_mapping(obj, i))
    return rows


def filter_low_activity(
    issues: list[IssueRecord], min_resolved: int = 10, fixed_point: bool = False
) -> list[IssueRecord]:
    """Drop developers with fewer than min_resolved bugs, and all their reports.

    Counts are taken over the full input, before any splitting. With
    fixed_point=True the filter recounts and reapplies until no developer
    is below threshold (at most one extra pass per removed developer).
    """
    current = issues
    while True:
        counts = Counter(rec.assignee for rec in current)
        kept = [rec for rec in current if counts[rec.assignee] >= min_resolved]
        if not fixed_point or len(kept) == len(current):
            return kept
        current = kept


def window_filter(issues: list[IssueRecord], start: datetime, end: datetime) -> list[IssueRecord]:
    """Keep issues resolved in the half-open interval [start, end)."""
    start = parse_timestamp(start)
    end = parse_timestamp(end)
    if start >= end:
        raise InvalidWindow(f"window start {start.isoformat()} is not before end {end.isoformat()}")
    return [rec for rec in issues if start <= rec.resolved_at < end]


def effective_seed(config: SplitConfig) -> int:
    """Split seed, honoring the TRIAGE_SEED environment override."""
    env = os.environ.get(SEED_ENV_VAR)
    return int(env) if env else config.seed


def split_bucket(bug_id: str, seed: int, config: SplitConfig = SplitConfig()) -> str:
    """Deterministic split assignment for one bug_id under a seed."""
    digest = hashlib.sha256(f"{bug_id}{seed}".encode("utf-8")).digest()
    u = int.from_bytes(digest[:8], "big") / 2**64
    if u < config.train_fraction:
        return "train"
    if u < config.train_fraction + config.validation_fraction:
        return "validation"
    return "test"


def split(
    issues: list[IssueRecord], config: SplitConfig = SplitConfig()
) -> tuple[list[IssueRecord], list[IssueRecord], list[IssueRecord]]:
    """Hash-bucket issues into (train, validation, test).

    Membership is a pure function of (bug_id, seed): permuting the input
    never moves an issue between splits.
    """
    seed = effective_seed(config)
    buckets: dict[str, list[IssueRecord]] = {"train": [], "validation": [], "test": []}
    for rec in issues:
        buckets[split_bucket(rec.bug_id, seed, config)].append(rec)
    return buckets["train"], buckets["validation"], buckets["test"]


def compute_stats(issues: list[IssueRecord]) -> DatasetStats:
    """Corpus-level counts: bugs, developers, assignment relationships, density."""
    if not issues:
        raise EmptyCorpus()
    bugs = len({rec.bug_id for rec in issues})
    developers = len({rec.assignee for rec in issues})
    relationships = len({(rec.bug_id, rec.assignee) for rec in issues})
    density = relationships / (bugs * developers)
    return DatasetStats(bugs=bugs, developers=developers, relationships=relationships, density=density)


def write_corpus(issues: Iterable[IssueRecord], path: str | Path) -> int:
    """Write the canonical corpus JSONL; returns the record count."""
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in issues:
            obj = {
                "bug_id": rec.bug_id,
                "title": rec.title,
                "body": rec.body,
                "assignee": rec.assignee,
                "resolved_at": rec.resolved_at.isoformat(),
                "source_project": rec.source_project,
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
            count += 1
    return count


def read_corpus(path: str | Path) -> list[IssueRecord]:
    """Read a canonical corpus JSONL file."""
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(i, exc.msg) from exc
            missing = [k for k in CORPUS_KEYS if k not in obj]
            if missing:
                raise ParseError(i, f"corpus record missing keys {missing}")
            records.append(
                IssueRecord(
                    bug_id=obj["bug_id"],
                    title=obj["title"],
                    body=obj["body"],
                    assignee=obj["assignee"],
                    resolved_at=parse_timestamp(obj["resolved_at"]),
                    source_project=obj["source_project"],
                )
            )
    return records
