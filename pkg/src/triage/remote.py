"""Paginating client for Bugzilla-style REST issue endpoints."""

from __future__ import annotations

from dataclasses import dataclass, field
from urllib.parse import parse_qsl

import requests

from .errors import HttpError, SchemaMismatch
from .ingest import RawIssue, parse_timestamp

# Remote field names accepted for each RawIssue field, tried in order.
FIELD_ALIASES: dict[str, tuple[str, ...]] = {
    "bug_id": ("bug_id", "id"),
    "summary": ("summary", "title"),
    "description": ("description", "body"),
    "fixer": ("fixer", "assigned_to", "assignee"),
    "priority": ("priority",),
    "status": ("status",),
    "resolved_at": ("resolved_at", "cf_last_resolved", "last_change_time"),
}

OPTIONAL_FIELDS = ("priority", "status")


@dataclass
class FetchResult:
    issues: list[RawIssue] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _map_remote(obj: dict) -> RawIssue:
    values: dict[str, str] = {}
    for target, aliases in FIELD_ALIASES.items():
        for alias in aliases:
            if alias in obj and obj[alias] is not None:
                values[target] = str(obj[alias])
                break
        else:
            if target in OPTIONAL_FIELDS:
                values[target] = ""
            else:
                raise SchemaMismatch(target)
    used = {alias for aliases in FIELD_ALIASES.values() for alias in aliases}
    extra = {k: str(v) for k, v in obj.items() if k not in used}
    return RawIssue(
        bug_id=values["bug_id"],
        summary=values["summary"],
        description=values["description"],
        fixer=values["fixer"],
        priority=values["priority"],
        status=values["status"],
        resolved_at=parse_timestamp(values["resolved_at"]),
        extra=extra,
    )


def fetch_remote(
    base_url: str,
    query: str,
    page_size: int = 50,
    *,
    timeout: float = 30.0,
    session: requests.Session | None = None,
) -> FetchResult:
    """Fetch issues page by page until the server is exhausted.

    A network failure after at least one successful page returns the
    partial result with a warning record instead of raising.
    """
    if not query:
        raise ValueError("query must be non-empty")
    sess = session or requests.Session()
    params = dict(parse_qsl(query))
    result = FetchResult()
    offset = 0
    while True:
        page_params = {**params, "limit": page_size, "offset": offset}
        try:
            resp = sess.get(base_url, params=page_params, timeout=timeout)
        except requests.RequestException as exc:
            if result.issues:
                result.warnings.append(f"fetch aborted at offset {offset}: {exc}")
                return result
            raise HttpError(0, str(exc)) from exc
        if resp.status_code != 200:
            if result.issues:
                result.warnings.append(f"fetch aborted at offset {offset}: HTTP {resp.status_code}")
                return result
            raise HttpError(resp.status_code)
        payload = resp.json()
        bugs = payload.get("bugs", payload if isinstance(payload, list) else [])
        for obj in bugs:
            result.issues.append(_map_remote(obj))
        if len(bugs) < page_size:
            return result
        offset += page_size
