"""Single `triage` executable: ingest, shape, roster, predict, eval, report."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__, ingest as ing
from .backends import HttpBackend, MockBackend, endpoint_from_env
from .decoder import (
    BeamConfig,
    RankedPrediction,
    free_decode,
    postprocess_topk,
    rank_constrained,
    read_predictions,
    top1_prediction,
    write_predictions,
)
from .errors import TriageError, UsageError
from .evaluate import compare_report, hit_at_k, read_metrics, window_report, write_metrics
from .manifest import write_manifest
from .prompts import PromptBundle, emit_jsonl, render_top1, render_topk, shape_conversation
from .remote import fetch_remote
from .reporting import (
    baseline_vector,
    load_baseline,
    plot_hit_curve,
    plot_window_bars,
    write_comparison,
    write_metrics_csv,
    write_window,
)
from .roster import build_roster, load_roster, save_roster
from .trie import compile_trie


def _parse_window(value: str) -> tuple:
    if ".." not in value:
        raise UsageError(f"window must look like <start>..<end>, got {value!r}")
    start_s, end_s = value.split("..", 1)
    try:
        start = ing.parse_timestamp(start_s)
        end = ing.parse_timestamp(end_s)
    except ValueError as exc:
        raise UsageError(f"bad window timestamp: {exc}") from exc
    return start, end


def _resolve_corpus_file(corpus: str, mode: str) -> Path:
    path = Path(corpus)
    if path.is_dir():
        name = "train.jsonl" if mode == "sft" else "test.jsonl"
        path = path / name
    if not path.exists():
        raise UsageError(f"corpus file {path} does not exist")
    return path


def _make_backend(args) -> MockBackend | HttpBackend:
    if args.backend == "mock":
        return MockBackend(seed=args.seed)
    endpoint = args.endpoint or endpoint_from_env()
    if not endpoint:
        raise UsageError("--endpoint (or TRIAGE_ENDPOINT) is required for the http backend")
    return HttpBackend(endpoint, in_flight_cap=args.in_flight)


def cmd_ingest(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    inputs = []
    if args.input.startswith(("http://", "https://")):
        if not args.query:
            raise UsageError("--query is required when --input is a URL")
        result = fetch_remote(args.input, args.query, args.page_size)
        raws = result.issues
        for warning in result.warnings:
            print(f"warning: {warning}", file=sys.stderr)
    else:
        path = Path(args.input)
        if not path.exists():
            raise UsageError(f"input file {path} does not exist")
        fmt = args.format or path.suffix.lstrip(".").lower()
        if fmt not in ("csv", "json", "jsonl"):
            raise UsageError(f"cannot infer format for {path}; pass --format")
        raws = ing.load_export(path, fmt)
        inputs.append(path)

    records, dropped = ing.normalize_issues(raws, args.project)
    if args.window:
        start, end = _parse_window(args.window)
        records = ing.window_filter(records, start, end)
    records = ing.filter_low_activity(records, args.min_resolved, fixed_point=args.fixed_point)

    config = ing.SplitConfig(seed=args.seed)
    train, validation, test = ing.split(records, config)
    stats = ing.compute_stats(records)

    ing.write_corpus(records, out / "corpus.jsonl")
    ing.write_corpus(train, out / "train.jsonl")
    ing.write_corpus(validation, out / "validation.jsonl")
    ing.write_corpus(test, out / "test.jsonl")
    stats_obj = {
        "bugs": stats.bugs,
        "developers": stats.developers,
        "relationships": stats.relationships,
        "density": float(stats.density_display()),
        "dropped_empty": dropped,
        "splits": {"train": len(train), "validation": len(validation), "test": len(test)},
    }
    (out / "stats.json").write_text(json.dumps(stats_obj, indent=2) + "\n", encoding="utf-8")
    write_manifest(
        out,
        command="ingest",
        config={
            "input": args.input,
            "format": args.format,
            "window": args.window,
            "min_resolved": args.min_resolved,
            "fixed_point": args.fixed_point,
            "project": args.project,
        },
        inputs=inputs,
        outputs=["corpus.jsonl", "train.jsonl", "validation.jsonl", "test.jsonl", "stats.json"],
        seed=ing.effective_seed(config),
    )
    print(f"ingested {len(records)} issues -> {out} (train/val/test = "
          f"{len(train)}/{len(validation)}/{len(test)})")
    return 0


def cmd_shape(args) -> int:
    corpus_file = _resolve_corpus_file(args.corpus, args.mode)
    records = ing.read_corpus(corpus_file)
    tokenizer = _make_backend(args).tokenizer
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)

    if args.mode == "sft":
        conversations = [
            shape_conversation(rec, args.budget, tokenizer, template_dir=args.template_dir)
            for rec in records
        ]
        count = emit_jsonl(conversations, out)
    else:
        if args.mode == "topk":
            if not args.roster:
                raise UsageError("--roster is required for topk shaping")
            roster = load_roster(args.roster)
            bundles = [
                render_topk(rec, list(roster.members), args.k, args.budget, tokenizer,
                            template_dir=args.template_dir)
                for rec in records
            ]
        else:
            bundles = [
                render_top1(rec, args.budget, tokenizer, template_dir=args.template_dir)
                for rec in records
            ]
        with out.open("w", encoding="utf-8", newline="\n") as fh:
            for bundle in bundles:
                fh.write(json.dumps(
                    {"issue_id": bundle.issue_id, "kind": bundle.kind,
                     "text": bundle.text, "k": bundle.k},
                    ensure_ascii=False) + "\n")
        count = len(bundles)

    write_manifest(
        out.parent,
        command="shape",
        config={"corpus": str(corpus_file), "mode": args.mode, "k": args.k, "budget": args.budget},
        inputs=[corpus_file],
        outputs=[out.name],
        seed=None,
    )
    print(f"shaped {count} records -> {out}")
    return 0


def cmd_roster_build(args) -> int:
    train = ing.read_corpus(args.train)
    official = None
    if args.official:
        official = [
            line.strip()
            for line in Path(args.official).read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.lstrip().startswith("#")
        ]
    roster = build_roster(train, official)
    save_roster(roster, args.out)
    print(f"roster with {len(roster)} members -> {args.out}")
    return 0


def _load_prompts(path: str | Path) -> list[PromptBundle]:
    bundles = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            bundles.append(PromptBundle(
                text=obj["text"], kind=obj["kind"], issue_id=obj["issue_id"], k=obj.get("k")))
    return bundles


def cmd_predict(args) -> int:
    bundles = _load_prompts(args.prompts)
    roster = load_roster(args.roster)
    backend = _make_backend(args)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)

    if args.mode == "constrained":
        trie = compile_trie(roster, backend.tokenizer)
        cfg = BeamConfig(k=args.k, beam_width=args.beam)

        def run(bundle: PromptBundle) -> RankedPrediction:
            return rank_constrained(bundle, trie, backend, cfg)
    else:
        def run(bundle: PromptBundle) -> RankedPrediction:
            raw = free_decode(bundle, backend, args.max_new_tokens)
            if bundle.kind == "topk":
                return postprocess_topk(raw, roster, args.k, issue_id=bundle.issue_id)
            return top1_prediction(raw, roster, args.k, issue_id=bundle.issue_id)

    with ThreadPoolExecutor(max_workers=args.in_flight) as pool:
        preds = list(pool.map(run, bundles))

    write_predictions(preds, out)
    write_manifest(
        out.parent,
        command="predict",
        config={"prompts": args.prompts, "roster": args.roster, "backend": args.backend,
                "mode": args.mode, "k": args.k, "beam": args.beam},
        inputs=[args.prompts, args.roster],
        outputs=[out.name],
        seed=args.seed,
    )
    print(f"predicted {len(preds)} issues -> {out}")
    return 0


def _load_gold(path: str | Path) -> dict[str, str]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        obj = None
    if isinstance(obj, dict) and not set(ing.CORPUS_KEYS) <= set(obj):
        return {str(k): str(v) for k, v in obj.items()}
    return {rec.bug_id: rec.assignee for rec in ing.read_corpus(path)}


def cmd_eval(args) -> int:
    preds = read_predictions(args.preds)
    gold = _load_gold(args.gold)
    roster = load_roster(args.roster) if args.roster else None
    report = hit_at_k(
        preds, gold, args.k_max,
        project=args.project, window_label=args.window, roster=roster,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_metrics(report, out)
    write_metrics_csv(report, out.with_suffix(".csv"))
    write_manifest(
        out.parent,
        command="eval",
        config={"preds": args.preds, "gold": args.gold, "k_max": args.k_max},
        inputs=[args.preds, args.gold],
        outputs=[out.name, out.with_suffix(".csv").name],
        seed=None,
    )
    print(f"n_pred={report.n_pred} top1={report.display_top1()} "
          f"hit@{report.k_max}={report.display_ratios()[-1]} -> {out}")
    return 0


def cmd_report(args) -> int:
    metrics = read_metrics(args.metrics)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = ["metrics_table.csv", "hit_at_k.png"]
    write_metrics_csv(metrics, out / "metrics_table.csv")

    if args.baseline:
        baseline = load_baseline(args.baseline)
        name, vector = baseline_vector(baseline, metrics.project)
        table = compare_report(metrics, vector, name)
        write_comparison(table, out / "comparison.csv", out / "comparison.md")
        plot_hit_curve(metrics, out / "hit_at_k.png", baseline=(name, vector))
        outputs += ["comparison.csv", "comparison.md"]
        print(table.to_markdown(), end="")
    elif args.compare:
        other = read_metrics(args.compare)
        wr = window_report(metrics, other)
        write_window([wr], out / "window.csv", out / "window.md")
        plot_window_bars([wr], out / "window.png")
        plot_hit_curve(metrics, out / "hit_at_k.png")
        outputs += ["window.csv", "window.md", "window.png"]
        print((out / "window.md").read_text(encoding="utf-8"), end="")
    else:
        plot_hit_curve(metrics, out / "hit_at_k.png")
        for k, (count, ratio) in enumerate(
            zip(metrics.hits, metrics.display_ratios()), start=1
        ):
            print(f"hit@{k}: {count} ({ratio})")

    write_manifest(
        out,
        command="report",
        config={"metrics": args.metrics, "baseline": args.baseline, "compare": args.compare},
        inputs=[p for p in (args.metrics, args.compare) if p],
        outputs=outputs,
        seed=None,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="triage", description=__doc__)
    parser.add_argument("--version", action="version", version=f"triage {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load, filter, window, and split a tracker export")
    p.add_argument("--input", required=True, help="export file or tracker URL")
    p.add_argument("--format", choices=["csv", "json", "jsonl"])
    p.add_argument("--query", default="", help="tracker query string (URL inputs)")
    p.add_argument("--page-size", type=int, default=50)
    p.add_argument("--window", help="half-open window <start>..<end>, ISO-8601")
    p.add_argument("--min-resolved", type=int, default=10)
    p.add_argument("--fixed-point", action="store_true",
                   help="reapply the activity filter until it stabilizes")
    p.add_argument("--seed", type=int, default=3407)
    p.add_argument("--project", default="Other")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("shape", help="render a corpus into JSONL records or prompts")
    p.add_argument("--corpus", required=True, help="corpus file, or ingest output dir")
    p.add_argument("--mode", choices=["sft", "top1", "topk"], required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--budget", type=int, default=2048)
    p.add_argument("--roster", help="roster file (required for topk)")
    p.add_argument("--template-dir")
    p.add_argument("--backend", choices=["mock", "http"], default="mock")
    p.add_argument("--endpoint")
    p.add_argument("--seed", type=int, default=3407)
    p.add_argument("--in-flight", type=int, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_shape)

    p = sub.add_parser("roster", help="roster operations")
    roster_sub = p.add_subparsers(dest="roster_command", required=True)
    pb = roster_sub.add_parser("build", help="build a roster from training labels")
    pb.add_argument("--train", required=True, help="training split corpus JSONL")
    pb.add_argument("--official", help="optional official roster file to union in")
    pb.add_argument("--out", required=True)
    pb.set_defaults(func=cmd_roster_build)

    p = sub.add_parser("predict", help="rank Top-K assignees for shaped prompts")
    p.add_argument("--prompts", required=True)
    p.add_argument("--roster", required=True)
    p.add_argument("--backend", choices=["mock", "http"], default="mock")
    p.add_argument("--endpoint", help="model server URL (or TRIAGE_ENDPOINT)")
    p.add_argument("--mode", choices=["constrained", "free"], default="constrained")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--beam", type=int, default=None)
    p.add_argument("--seed", type=int, default=3407, help="mock backend seed")
    p.add_argument("--max-new-tokens", type=int, default=64)
    p.add_argument("--in-flight", type=int, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="compute Top-1 and Hit@K against gold labels")
    p.add_argument("--preds", required=True)
    p.add_argument("--gold", required=True, help="corpus JSONL or JSON {issue_id: assignee}")
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--project", default="")
    p.add_argument("--window", default="", help="window label for the report")
    p.add_argument("--roster", help="tally golds outside this roster")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="tables and figures from a metrics file")
    p.add_argument("--metrics", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--baseline", help="baseline JSON file, or builtin name 'ncgbt'")
    group.add_argument("--compare", help="second metrics file for a window report")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        _print_error(exc)
        return 2
    except TriageError as exc:
        _print_error(exc)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "IoError", "detail": str(exc)}), file=sys.stderr)
        return 1


def _print_error(exc: TriageError) -> None:
    print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
