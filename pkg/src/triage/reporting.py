"""Render metrics into delimited tables and figures on disk."""

from __future__ import annotations

import csv
import json
from decimal import Decimal
from importlib import resources
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluate import ComparisonTable, MetricsReport, WindowReport, window_markdown

BUILTIN_BASELINES = {"ncgbt": "ncgbt_multiyear.json"}


def load_baseline(source: str | Path) -> dict:
    """Load a baseline file; bare builtin names resolve to shipped data."""
    key = str(source).lower()
    if key in BUILTIN_BASELINES:
        text = resources.files("triage.data").joinpath(BUILTIN_BASELINES[key]).read_text("utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    return json.loads(text)


def baseline_vector(baseline: dict, project: str) -> tuple[str, list[Decimal]]:
    vectors = baseline.get("vectors", {})
    if project not in vectors:
        raise KeyError(f"baseline has no vector for project {project!r}")
    return baseline.get("name", "baseline"), [Decimal(str(v)) for v in vectors[project]]


def write_metrics_csv(report: MetricsReport, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "hits", "ratio"])
        for k, (count, ratio) in enumerate(zip(report.hits, report.display_ratios()), start=1):
            writer.writerow([k, count, f"{ratio:.3f}"])


def write_comparison(table: ComparisonTable, csv_path: str | Path, md_path: str | Path) -> None:
    with Path(csv_path).open("w", encoding="utf-8", newline="") as fh:
        csv.writer(fh).writerows(table.to_csv_rows())
    Path(md_path).write_text(table.to_markdown(), encoding="utf-8")


def write_window(reports: Sequence[WindowReport], csv_path: str | Path, md_path: str | Path) -> None:
    first = reports[0]
    with Path(csv_path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["project", f"{first.a_label} top1", f"{first.a_label} hit10",
             f"{first.b_label} top1", f"{first.b_label} hit10"]
        )
        for rep in reports:
            writer.writerow(
                [rep.project, f"{rep.a_top1:.3f}", f"{rep.a_hit10:.3f}",
                 f"{rep.b_top1:.3f}", f"{rep.b_hit10:.3f}"]
            )
    Path(md_path).write_text(window_markdown(reports), encoding="utf-8")


def plot_hit_curve(
    report: MetricsReport,
    path: str | Path,
    baseline: tuple[str, Sequence[Decimal]] | None = None,
) -> None:
    """Hit@K curve, optionally overlaid with a baseline vector."""
    ks = list(range(1, report.k_max + 1))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ks, [float(r) for r in report.display_ratios()], marker="o", label="Ours (LLM)")
    if baseline is not None:
        name, vector = baseline
        ax.plot(ks, [float(v) for v in vector], marker="s", linestyle="--", label=name)
    ax.set_xlabel("K")
    ax.set_ylabel("Hit@K")
    ax.set_xticks(ks)
    ax.set_ylim(0.0, 1.0)
    title = " / ".join(p for p in (report.project, report.window_label) if p)
    if title:
        ax.set_title(title)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_window_bars(reports: Sequence[WindowReport], path: str | Path) -> None:
    """Grouped Top-1 / Hit@10 bars for the two evaluation windows."""
    first = reports[0]
    labels = []
    values = []
    for rep in reports:
        labels.extend(
            [f"{rep.project}\nTop-1", f"{rep.project}\nHit@10"]
        )
        values.append((float(rep.a_top1), float(rep.b_top1)))
        values.append((float(rep.a_hit10), float(rep.b_hit10)))
    xs = range(len(values))
    width = 0.38
    fig, ax = plt.subplots(figsize=(1.8 * len(values) + 2, 4))
    ax.bar([x - width / 2 for x in xs], [v[0] for v in values], width, label=first.a_label)
    ax.bar([x + width / 2 for x in xs], [v[1] for v in values], width, label=first.b_label)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels)
    ax.set_ylabel("ratio")
    ax.set_ylim(0.0, 1.0)
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
