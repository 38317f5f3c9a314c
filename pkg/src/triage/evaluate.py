"""Top-1 accuracy and Hit@K over prediction files, plus comparison tables.

Hit@K = N_hit / N_pred. Displayed ratios are rounded half-up to 3 decimal
places; full precision is kept internally. Issues whose gold assignee is
outside the roster stay in the denominator as guaranteed misses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Mapping, Sequence

from .decoder import RankedPrediction
from .errors import LengthMismatch, MissingGold, ProjectMismatch
from .roster import Roster

DEFAULT_K_MAX = 10


def ratio_display(numerator: int | Decimal, denominator: int, places: int = 3) -> Decimal:
    """Half-up rounded ratio at the table's printed precision."""
    q = Decimal(10) ** -places
    return (Decimal(numerator) / Decimal(denominator)).quantize(q, rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class MetricsReport:
    """Hit counts and ratios for one evaluation run."""

    n_pred: int
    hits: tuple[int, ...]  # N_hit at K = 1..k_max
    project: str = ""
    window_label: str = ""
    mode: str = ""
    misses_gold_not_in_roster: int = 0

    def __post_init__(self) -> None:
        if any(a > b for a, b in zip(self.hits, self.hits[1:])):
            raise ValueError("hit counts must be non-decreasing in K")

    @property
    def k_max(self) -> int:
        return len(self.hits)

    @property
    def ratios(self) -> tuple[float, ...]:
        return tuple(h / self.n_pred for h in self.hits)

    @property
    def top1_accuracy(self) -> float:
        return self.hits[0] / self.n_pred

    def display_ratios(self) -> list[Decimal]:
        return [ratio_display(h, self.n_pred) for h in self.hits]

    def display_top1(self) -> Decimal:
        return ratio_display(self.hits[0], self.n_pred)

    def to_json(self) -> dict:
        return {
            "project": self.project,
            "window": self.window_label,
            "mode": self.mode,
            "n_pred": self.n_pred,
            "hits": list(self.hits),
            "ratios": [float(r) for r in self.display_ratios()],
            "top1": float(self.display_top1()),
            "misses_gold_not_in_roster": self.misses_gold_not_in_roster,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "MetricsReport":
        return cls(
            n_pred=obj["n_pred"],
            hits=tuple(obj["hits"]),
            project=obj.get("project", ""),
            window_label=obj.get("window", ""),
            mode=obj.get("mode", ""),
            misses_gold_not_in_roster=obj.get("misses_gold_not_in_roster", 0),
        )


def write_metrics(report: MetricsReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8")


def read_metrics(path: str | Path) -> MetricsReport:
    return MetricsReport.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _gold_for(pred: RankedPrediction, gold: Mapping[str, str]) -> str:
    if pred.issue_id not in gold:
        raise MissingGold(pred.issue_id)
    return gold[pred.issue_id].strip().lower()


def top1_accuracy(preds: Sequence[RankedPrediction], gold: Mapping[str, str]) -> float:
    """Fraction of exact matches between the first prediction and the gold label."""
    correct = 0
    for pred in preds:
        label = _gold_for(pred, gold)
        first = pred.entries[0][0] if pred.entries else None
        correct += int(first == label)
    return correct / len(preds)


def hit_at_k(
    preds: Sequence[RankedPrediction],
    gold: Mapping[str, str],
    k_max: int = DEFAULT_K_MAX,
    *,
    project: str = "",
    window_label: str = "",
    roster: Roster | None = None,
) -> MetricsReport:
    """Count issues whose gold assignee appears within the first K predictions."""
    hits = [0] * k_max
    misses_outside = 0
    modes = set()
    for pred in preds:
        if pred.k < k_max:
            raise LengthMismatch(k_max, pred.k)
        label = _gold_for(pred, gold)
        modes.add(pred.mode)
        if roster is not None and label not in roster:
            misses_outside += 1
        for rank, (ident, _) in enumerate(pred.entries[:k_max], start=1):
            if ident == label:
                for k in range(rank, k_max + 1):
                    hits[k - 1] += 1
                break
    return MetricsReport(
        n_pred=len(preds),
        hits=tuple(hits),
        project=project,
        window_label=window_label,
        mode=modes.pop() if len(modes) == 1 else "mixed",
        misses_gold_not_in_roster=misses_outside,
    )


@dataclass(frozen=True)
class CompareRow:
    k: int
    ours: Decimal
    baseline: Decimal
    delta_pp: Decimal

    @property
    def formatted(self) -> str:
        return f"{self.delta_pp:+.2f}"


@dataclass(frozen=True)
class ComparisonTable:
    project: str
    baseline_name: str
    rows: tuple[CompareRow, ...] = field(default_factory=tuple)

    def deltas(self) -> list[Decimal]:
        return [row.delta_pp for row in self.rows]

    def to_markdown(self) -> str:
        lines = [
            f"| K | Ours | {self.baseline_name} | Delta (pp) |",
            "| --- | --- | --- | --- |",
        ]
        for row in self.rows:
            lines.append(f"| {row.k} | {row.ours:.3f} | {row.baseline} | {row.formatted} |")
        return "\n".join(lines) + "\n"

    def to_csv_rows(self) -> list[list[str]]:
        out = [["k", "ours", self.baseline_name, "delta_pp"]]
        for row in self.rows:
            out.append([str(row.k), f"{row.ours:.3f}", str(row.baseline), row.formatted])
        return out


def compare_report(
    ours: MetricsReport, baseline: Sequence[float | str | Decimal], baseline_name: str
) -> ComparisonTable:
    """Per-K deltas in percentage points against a published baseline vector.

    Deltas are computed on the displayed (3-decimal) ratios, matching how
    published tables are derived from their printed values.
    """
    if len(baseline) != ours.k_max:
        raise LengthMismatch(ours.k_max, len(baseline))
    rows = []
    for k, (ours_d, base) in enumerate(zip(ours.display_ratios(), baseline), start=1):
        base_d = Decimal(str(base))
        delta = ((ours_d - base_d) * 100).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
        rows.append(CompareRow(k=k, ours=ours_d, baseline=base_d, delta_pp=delta))
    return ComparisonTable(project=ours.project, baseline_name=baseline_name, rows=tuple(rows))


@dataclass(frozen=True)
class WindowReport:
    """Side-by-side Top-1 / Hit@10 for the same project under two windows."""

    project: str
    a_label: str
    b_label: str
    a_top1: Decimal
    a_hit10: Decimal
    b_top1: Decimal
    b_hit10: Decimal

    def row(self) -> str:
        return (
            f"| {self.project} | {self.a_top1:.3f} | {self.a_hit10:.3f} "
            f"| {self.b_top1:.3f} | {self.b_hit10:.3f} |"
        )


def window_report(a: MetricsReport, b: MetricsReport) -> WindowReport:
    if a.project != b.project:
        raise ProjectMismatch(a.project, b.project)
    for report in (a, b):
        if report.k_max < 10:
            raise LengthMismatch(10, report.k_max)
    return WindowReport(
        project=a.project,
        a_label=a.window_label,
        b_label=b.window_label,
        a_top1=a.display_top1(),
        a_hit10=a.display_ratios()[9],
        b_top1=b.display_top1(),
        b_hit10=b.display_ratios()[9],
    )


def window_markdown(reports: Sequence[WindowReport]) -> str:
    """Multi-row window-effect table; labels come from the first report."""
    first = reports[0]
    lines = [
        f"| Project | {first.a_label} Top-1 | {first.a_label} Hit@10 "
        f"| {first.b_label} Top-1 | {first.b_label} Hit@10 |",
        "| --- | --- | --- | --- | --- |",
    ]
    lines.extend(report.row() for report in reports)
    return "\n".join(lines) + "\n"
