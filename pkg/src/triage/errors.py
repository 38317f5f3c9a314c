"""Exception types shared across the toolchain."""

from __future__ import annotations


class TriageError(Exception):
    """Base class for all toolchain errors."""


class UsageError(TriageError):
    """Invalid invocation or argument combination (CLI exit code 2)."""


# --- ingest ---

class MissingField(TriageError):
    def __init__(self, row: int, field: str):
        self.row = row
        self.field = field
        super().__init__(f"row {row}: missing required field {field!r}")


class ParseError(TriageError):
    def __init__(self, line: int, detail: str = ""):
        self.line = line
        self.detail = detail
        super().__init__(f"line {line}: {detail or 'unparseable input'}")


class DuplicateBugId(TriageError):
    def __init__(self, bug_id: str):
        self.bug_id = bug_id
        super().__init__(f"duplicate bug_id {bug_id!r}")


class EmptyIdentifier(TriageError):
    def __init__(self) -> None:
        super().__init__("identifier is empty after normalization")


class EmptyIssue(TriageError):
    def __init__(self, bug_id: str):
        self.bug_id = bug_id
        super().__init__(f"bug {bug_id!r} has neither title nor body")


class InvalidWindow(UsageError):
    def __init__(self, detail: str = "window start must precede end"):
        super().__init__(detail)


class EmptyCorpus(TriageError):
    def __init__(self) -> None:
        super().__init__("corpus is empty")


class SchemaMismatch(TriageError):
    def __init__(self, field: str):
        self.field = field
        super().__init__(f"remote record is missing expected field {field!r}")


# --- prompt shaping ---

class BudgetTooSmall(TriageError):
    def __init__(self, budget: int, needed: int):
        self.budget = budget
        self.needed = needed
        super().__init__(
            f"token budget {budget} cannot fit the untruncatable prompt parts ({needed} tokens)"
        )


class CandidatesDoNotFit(TriageError):
    def __init__(self, budget: int, needed: int):
        self.budget = budget
        self.needed = needed
        super().__init__(
            f"candidate list does not fit: {needed} tokens with empty body vs budget {budget}"
        )


class MalformedLine(TriageError):
    def __init__(self, line: int, detail: str = ""):
        self.line = line
        self.detail = detail
        super().__init__(f"line {line}: {detail or 'malformed JSONL record'}")


class MissingRole(TriageError):
    def __init__(self, line: int, role: str):
        self.line = line
        self.role = role
        super().__init__(f"line {line}: record is missing role {role!r}")


# --- roster / trie ---

class EmptyRoster(TriageError):
    def __init__(self) -> None:
        super().__init__("roster has no members")


class TokenizationFailure(TriageError):
    def __init__(self, member: str, detail: str = ""):
        self.member = member
        self.detail = detail
        super().__init__(f"cannot tokenize roster member {member!r}: {detail or 'empty token sequence'}")


# --- backends ---

class BackendError(TriageError):
    """Base class for scoring-backend failures."""


class HttpError(BackendError):
    def __init__(self, status: int, detail: str = ""):
        self.status = status
        self.detail = detail
        super().__init__(f"HTTP {status}{': ' + detail if detail else ''}")


class RequestTimeout(BackendError):
    def __init__(self, detail: str = ""):
        super().__init__(f"request timed out{': ' + detail if detail else ''}")


class ProtocolError(BackendError):
    def __init__(self, detail: str):
        self.detail = detail
        super().__init__(f"protocol violation: {detail}")


# --- decoder ---

class EmptyTrie(TriageError):
    def __init__(self) -> None:
        super().__init__("token trie has no paths")


# --- evaluator ---

class MissingGold(TriageError):
    def __init__(self, issue_id: str):
        self.issue_id = issue_id
        super().__init__(f"no gold label for issue {issue_id!r}")


class LengthMismatch(TriageError):
    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"K-range mismatch: expected {expected} entries, got {got}")


class ProjectMismatch(TriageError):
    def __init__(self, a: str, b: str):
        super().__init__(f"reports cover different projects: {a!r} vs {b!r}")
