from __future__ import annotations

import json
from pathlib import Path

import pytest

from triage.cli import main
from triage.decoder import read_predictions
from triage.evaluate import read_metrics


def run(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def pipeline_dir(tmp_path, fixture_csv, capsys) -> Path:
    """Ingested fixture corpus with roster and shaped prompts."""
    out = tmp_path / "run"
    code, _, err = run(
        capsys, "ingest", "--input", str(fixture_csv), "--format", "csv",
        "--min-resolved", "2", "--seed", "3407", "--out", str(out),
    )
    assert code == 0, err
    code, _, err = run(
        capsys, "roster", "build", "--train", str(out / "train.jsonl"),
        "--out", str(out / "roster.txt"),
    )
    assert code == 0, err
    code, _, err = run(
        capsys, "shape", "--corpus", str(out), "--mode", "top1",
        "--budget", "2048", "--out", str(out / "prompts.jsonl"),
    )
    assert code == 0, err
    return out


class TestIngest:
    def test_outputs_exist(self, pipeline_dir):
        for name in ("corpus.jsonl", "train.jsonl", "validation.jsonl", "test.jsonl",
                     "stats.json", "manifest.json"):
            assert (pipeline_dir / name).exists()
        stats = json.loads((pipeline_dir / "stats.json").read_text())
        assert stats["bugs"] == 20
        assert stats["developers"] == 3
        assert sum(stats["splits"].values()) == 20

    def test_min_resolved_10_matches_recount(self, tmp_path, fixture_csv, capsys):
        out = tmp_path / "strict"
        code, _, _ = run(
            capsys, "ingest", "--input", str(fixture_csv), "--format", "csv",
            "--min-resolved", "10", "--out", str(out),
        )
        assert code == 0
        stats = json.loads((out / "stats.json").read_text())
        # fixture has alice=10, bob=6, carol=4; strict "fewer than 10" keeps alice only
        assert stats["bugs"] == 10
        assert stats["developers"] == 1

    def test_bad_window_exits_2_with_error_json(self, tmp_path, fixture_csv, capsys):
        code, _, err = run(
            capsys, "ingest", "--input", str(fixture_csv), "--format", "csv",
            "--window", "2020-01-01..2019-01-01", "--out", str(tmp_path / "x"),
        )
        assert code == 2
        payload = json.loads(err.strip().splitlines()[-1])
        assert payload["error"] == "InvalidWindow"

    def test_window_filters_issues(self, tmp_path, fixture_csv, capsys):
        out = tmp_path / "windowed"
        code, _, _ = run(
            capsys, "ingest", "--input", str(fixture_csv), "--format", "csv",
            "--window", "2024-01-01..2024-04-01", "--min-resolved", "1",
            "--out", str(out),
        )
        assert code == 0
        stats = json.loads((out / "stats.json").read_text())
        assert stats["bugs"] == 11  # resolved before April


class TestPredictEvalReport:
    def test_end_to_end_mock_run(self, pipeline_dir, tmp_path, capsys):
        preds_path = pipeline_dir / "preds.jsonl"
        code, _, err = run(
            capsys, "predict", "--prompts", str(pipeline_dir / "prompts.jsonl"),
            "--roster", str(pipeline_dir / "roster.txt"), "--backend", "mock",
            "--mode", "constrained", "--k", "3", "--out", str(preds_path),
        )
        assert code == 0, err
        preds = read_predictions(preds_path)
        test_corpus = (pipeline_dir / "test.jsonl").read_text().strip().splitlines()
        assert len(preds) == len(test_corpus)

        metrics_path = pipeline_dir / "metrics.json"
        code, out_text, err = run(
            capsys, "eval", "--preds", str(preds_path),
            "--gold", str(pipeline_dir / "test.jsonl"), "--k-max", "3",
            "--project", "Fixture", "--out", str(metrics_path),
        )
        assert code == 0, err
        report = read_metrics(metrics_path)
        assert report.n_pred == len(preds)
        assert all(a <= b for a, b in zip(report.hits, report.hits[1:]))

        report_dir = tmp_path / "report"
        code, out_text, err = run(
            capsys, "report", "--metrics", str(metrics_path), "--out", str(report_dir),
        )
        assert code == 0, err
        assert (report_dir / "hit_at_k.png").exists()
        assert (report_dir / "metrics_table.csv").exists()

    def test_free_mode_runs(self, pipeline_dir, capsys):
        preds_path = pipeline_dir / "free_preds.jsonl"
        code, _, err = run(
            capsys, "predict", "--prompts", str(pipeline_dir / "prompts.jsonl"),
            "--roster", str(pipeline_dir / "roster.txt"), "--backend", "mock",
            "--mode", "free", "--k", "3", "--max-new-tokens", "8",
            "--out", str(preds_path),
        )
        assert code == 0, err
        for pred in read_predictions(preds_path):
            assert pred.mode == "free_postprocessed"
            assert len(pred.entries) == 3

    def test_missing_roster_flag_exits_2(self, pipeline_dir, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["predict", "--prompts", str(pipeline_dir / "prompts.jsonl"),
                  "--mode", "constrained", "--out", "x.jsonl"])
        assert exc.value.code == 2

    def test_determinism_byte_identical(self, pipeline_dir, capsys):
        args = [
            "predict", "--prompts", str(pipeline_dir / "prompts.jsonl"),
            "--roster", str(pipeline_dir / "roster.txt"), "--backend", "mock",
            "--mode", "constrained", "--k", "3",
        ]
        p1, p2 = pipeline_dir / "d1.jsonl", pipeline_dir / "d2.jsonl"
        assert main(args + ["--out", str(p1)]) == 0
        assert main(args + ["--out", str(p2)]) == 0
        capsys.readouterr()
        assert p1.read_bytes() == p2.read_bytes()


class TestReportTables:
    @staticmethod
    def _write_metrics(path: Path, project: str, window: str, n: int, hits: list[int]):
        from triage.evaluate import MetricsReport, write_metrics

        write_metrics(MetricsReport(n_pred=n, hits=tuple(hits), project=project,
                                    window_label=window), path)

    def test_baseline_comparison_reproduces_published_delta(self, tmp_path, capsys):
        metrics = tmp_path / "ecl.json"
        self._write_metrics(metrics, "EclipseJDT", "Multi-Year", 1612,
                            [251, 271, 349, 400, 575, 599, 610, 699, 750, 765])
        code, out_text, err = run(
            capsys, "report", "--metrics", str(metrics), "--baseline", "ncgbt",
            "--out", str(tmp_path / "rep"),
        )
        assert code == 0, err
        assert "-7.47" in out_text
        assert (tmp_path / "rep" / "comparison.csv").exists()
        assert (tmp_path / "rep" / "comparison.md").exists()

    def test_window_comparison(self, tmp_path, capsys):
        a = tmp_path / "six.json"
        b = tmp_path / "multi.json"
        self._write_metrics(a, "EclipseJDT", "Six-Month", 200, [166] * 9 + [198])
        self._write_metrics(b, "EclipseJDT", "Multi-Year", 1612,
                            [251, 271, 349, 400, 575, 599, 610, 699, 750, 765])
        code, out_text, err = run(
            capsys, "report", "--metrics", str(a), "--compare", str(b),
            "--out", str(tmp_path / "win"),
        )
        assert code == 0, err
        assert "| EclipseJDT | 0.830 | 0.990 | 0.156 | 0.475 |" in out_text
        assert (tmp_path / "win" / "window.png").exists()


class TestShapeModes:
    def test_sft_shape_emits_conversations(self, pipeline_dir, capsys):
        out = pipeline_dir / "sft.jsonl"
        code, _, err = run(
            capsys, "shape", "--corpus", str(pipeline_dir), "--mode", "sft",
            "--out", str(out),
        )
        assert code == 0, err
        first = json.loads(out.read_text().splitlines()[0])
        assert list(first) == ["system", "user", "assistant"]
        assert first["system"] == "You are an expert bug triager."

    def test_topk_shape_requires_roster(self, pipeline_dir, capsys):
        code, _, err = run(
            capsys, "shape", "--corpus", str(pipeline_dir), "--mode", "topk",
            "--out", str(pipeline_dir / "topk.jsonl"),
        )
        assert code == 2
        assert json.loads(err.strip().splitlines()[-1])["error"] == "UsageError"

    def test_topk_shape_with_roster(self, pipeline_dir, capsys):
        out = pipeline_dir / "topk.jsonl"
        code, _, err = run(
            capsys, "shape", "--corpus", str(pipeline_dir), "--mode", "topk",
            "--k", "3", "--roster", str(pipeline_dir / "roster.txt"),
            "--out", str(out),
        )
        assert code == 0, err
        first = json.loads(out.read_text().splitlines()[0])
        assert first["kind"] == "topk"
        assert "Top 3 unique assignees, comma-separated, no extra words." in first["text"]
