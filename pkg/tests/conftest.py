from __future__ import annotations

import random
import string
from datetime import datetime, timezone
from pathlib import Path

import pytest

from triage.backends import MockBackend
from triage.ingest import IssueRecord
from triage.roster import Roster

FIXTURES = Path(__file__).parent / "fixtures"
GOLDENS = Path(__file__).parent / "goldens"

EPOCH = datetime(2024, 1, 1, tzinfo=timezone.utc)


def make_issue(bug_id: str, assignee: str, title: str = "A bug", body: str = "It breaks.",
               resolved_at: datetime = EPOCH, project: str = "Other") -> IssueRecord:
    return IssueRecord(bug_id=bug_id, title=title, body=body, assignee=assignee,
                       resolved_at=resolved_at, source_project=project)


def make_corpus(counts: dict[str, int], start_id: int = 0) -> list[IssueRecord]:
    """One issue per assignment event, interleaved across developers."""
    issues = []
    i = start_id
    remaining = dict(counts)
    while any(v > 0 for v in remaining.values()):
        for dev in list(remaining):
            if remaining[dev] > 0:
                issues.append(make_issue(f"bug-{i}", dev))
                remaining[dev] -= 1
                i += 1
    return issues


def random_roster(rng: random.Random, max_size: int = 8, force_prefix_pair: bool = False) -> Roster:
    """Random valid identifiers; optionally include a token-prefix pair."""
    members: dict[str, None] = {}
    size = rng.randint(1, max_size)
    while len(members) < size:
        kind = rng.random()
        if kind < 0.5:
            local = "".join(rng.choices(string.ascii_lowercase + string.digits, k=rng.randint(1, 6)))
            domain = rng.choice(["x.io", "example.org", "mozilla.org", "dev.net"])
            members.setdefault(f"{local}@{domain}", None)
        else:
            handle = "".join(rng.choices(string.ascii_lowercase + string.digits, k=rng.randint(2, 8)))
            if handle != "none":
                members.setdefault(handle, None)
    if force_prefix_pair and len(members) >= 2:
        base = next(iter(members))
        members.setdefault((base + "x")[:64], None)
    return Roster(members=tuple(members), source="training_labels")


def predictions_realizing(hits: list[int], n: int, gold: str = "gold@pool.org", k: int = 10):
    """Synthetic prediction set whose Hit@K counts equal `hits` exactly.

    Issues 0..hits[0]-1 carry the gold at rank 1, the next hits[1]-hits[0]
    at rank 2, and so on; the remainder never contain the gold.
    """
    from triage.decoder import RankedPrediction

    fillers = [f"filler{j}@pool.org" for j in range(k + 1)]
    preds = []
    gold_map = {}
    for i in range(n):
        rank = next((j + 1 for j, h in enumerate(hits) if i < h), None)
        entries = []
        pool = iter(fillers)
        for slot in range(1, k + 1):
            if slot == rank:
                entries.append((gold, -float(slot)))
            else:
                entries.append((next(pool), -float(slot)))
        issue_id = f"issue-{i}"
        preds.append(RankedPrediction(
            issue_id=issue_id, entries=tuple(entries), k=k, mode="constrained"))
        gold_map[issue_id] = gold
    return preds, gold_map


@pytest.fixture
def mock_backend() -> MockBackend:
    return MockBackend(seed=7)


@pytest.fixture
def fixture_csv() -> Path:
    return FIXTURES / "issues_20.csv"


@pytest.fixture
def sample_issue() -> IssueRecord:
    return make_issue("1", "dev@example.com",
                      title="App crashes when saving.", body="Steps to reproduce...")
