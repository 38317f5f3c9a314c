from __future__ import annotations

import json

import pytest
from hypothesis import given, settings, strategies as st

from triage.backends import ByteTokenizer
from triage.errors import BudgetTooSmall, CandidatesDoNotFit, MalformedLine, MissingRole
from triage.prompts import (
    ANCHOR,
    SYSTEM_PROMPT,
    ConversationRecord,
    emit_jsonl,
    parse_jsonl,
    render_sft,
    render_top1,
    render_topk,
    shape_conversation,
    topk_instruction,
)

from conftest import GOLDENS, make_issue

TOK = ByteTokenizer()


class TestTemplates:
    def test_sft_golden_byte_for_byte(self, sample_issue):
        bundle = render_sft(sample_issue, "dev@example.com")
        assert bundle.text == GOLDENS.joinpath("sft_prompt.txt").read_text(encoding="utf-8")
        assert ANCHOR in bundle.text
        assert bundle.text.endswith("### Assignee: dev@example.com")

    def test_top1_golden_and_anchor_ending(self, sample_issue):
        bundle = render_top1(sample_issue)
        assert bundle.text == GOLDENS.joinpath("top1_prompt.txt").read_text(encoding="utf-8")
        assert bundle.text.endswith(ANCHOR)

    def test_topk_golden(self, sample_issue):
        bundle = render_topk(sample_issue, ["a@x.com", "b@x.com", "c@x.com"], k=3)
        assert bundle.text == GOLDENS.joinpath("topk_prompt.txt").read_text(encoding="utf-8")

    def test_anchor_law(self, sample_issue):
        sft = render_sft(sample_issue, "dev@example.com")
        top1 = render_top1(sample_issue)
        assert sft.text == top1.text + " " + "dev@example.com"

    @given(
        title=st.text(alphabet=st.characters(blacklist_categories=["Cs"]), min_size=1, max_size=40)
        .filter(lambda s: s.strip()),
        body=st.text(alphabet=st.characters(blacklist_categories=["Cs"]), max_size=200),
        gold=st.from_regex(r"[a-z0-9]{1,8}@[a-z]{1,8}\.[a-z]{2,4}", fullmatch=True),
    )
    @settings(max_examples=50, deadline=None)
    def test_anchor_law_property(self, title, body, gold):
        issue = make_issue("p", gold, title=title, body=body)
        assert render_sft(issue, gold).text == render_top1(issue).text + " " + gold

    def test_empty_body_still_renders(self):
        issue = make_issue("e", "d@x.io", title="Just a title", body="")
        bundle = render_top1(issue)
        assert "Just a title" in bundle.text
        assert bundle.text.endswith(ANCHOR)


class TestTruncation:
    def test_long_body_fits_budget_and_keeps_tail(self):
        issue = make_issue("long", "d@x.io", title="Big one", body="x" * 10_000)
        bundle = render_sft(issue, "gold@x.io", budget=2048, tokenizer=TOK)
        assert len(TOK.tokenize(bundle.text)) <= 2048
        assert bundle.text.endswith("### Assignee: gold@x.io")

    def test_budget_law_across_budgets(self):
        issue = make_issue("b", "d@x.io", body="word " * 500)
        for budget in (128, 300, 1000, 2048):
            bundle = render_top1(issue, budget=budget, tokenizer=TOK)
            assert len(TOK.tokenize(bundle.text)) <= budget

    def test_truncation_removes_only_a_body_suffix(self):
        issue = make_issue("m", "d@x.io", title="T", body="abcdefghij" * 50)
        big = shape_conversation(issue, budget=1000, tokenizer=TOK)
        small = shape_conversation(issue, budget=300, tokenizer=TOK)
        assert big.user.startswith(small.user)
        assert small.user.startswith("T\n\n")

    def test_budget_too_small(self):
        issue = make_issue("t", "d@x.io", title="A title that will not fit", body="body")
        with pytest.raises(BudgetTooSmall):
            render_sft(issue, "gold@x.io", budget=10, tokenizer=TOK)


class TestTopK:
    def test_three_candidates_parameterizes_instruction(self, sample_issue):
        bundle = render_topk(sample_issue, ["a@x.com", "b@x.com", "c@x.com"], k=3)
        assert "Top 3 unique assignees, comma-separated, no extra words." in bundle.text
        assert "a@x.com, b@x.com, c@x.com" in bundle.text

    def test_default_k10_instruction_is_verbatim(self, sample_issue):
        candidates = [f"d{i}@x.com" for i in range(10)]
        bundle = render_topk(sample_issue, candidates)
        assert "Top 10 unique assignees, comma-separated, no extra words." in bundle.text
        assert topk_instruction(10) == "Top 10 unique assignees, comma-separated, no extra words."

    def test_full_scale_roster_does_not_fit(self, sample_issue):
        candidates = [f"dev{i:04d}@eclipse.org" for i in range(4017)]
        with pytest.raises(CandidatesDoNotFit):
            render_topk(sample_issue, candidates, k=10, budget=2048, tokenizer=TOK)

    def test_duplicate_candidates_rejected(self, sample_issue):
        with pytest.raises(ValueError):
            render_topk(sample_issue, ["a@x.com", "a@x.com"], k=2)


class TestConversationJsonl:
    def test_shape_conversation_fields(self, sample_issue):
        rec = shape_conversation(sample_issue)
        assert rec.system == SYSTEM_PROMPT
        assert rec.user == "App crashes when saving.\n\nSteps to reproduce..."
        assert rec.assistant == "dev@example.com"

    def test_zero_records(self, tmp_path):
        path = tmp_path / "out.jsonl"
        assert emit_jsonl([], path) == 0
        assert path.read_text(encoding="utf-8") == ""

    def test_emitted_bytes_match_golden(self, tmp_path, sample_issue):
        rec = shape_conversation(sample_issue)
        path = tmp_path / "one.jsonl"
        emit_jsonl([rec], path)
        assert path.read_bytes() == GOLDENS.joinpath("conversation.jsonl").read_bytes()

    def test_single_record_round_trip(self, tmp_path):
        rec = ConversationRecord(system=SYSTEM_PROMPT, user="T\n\nB", assistant="d@x.io")
        path = tmp_path / "one.jsonl"
        assert emit_jsonl([rec], path) == 1
        assert parse_jsonl(path) == [rec]

    @given(pairs=st.lists(
        st.tuples(
            st.text(alphabet=st.characters(blacklist_categories=["Cs"]), max_size=50),
            st.text(alphabet=st.characters(blacklist_categories=["Cs"]), max_size=20),
        ),
        max_size=25,
    ))
    @settings(max_examples=30, deadline=None)
    def test_round_trip_property(self, pairs, tmp_path_factory):
        records = [ConversationRecord(system=SYSTEM_PROMPT, user=u, assistant=a) for u, a in pairs]
        path = tmp_path_factory.mktemp("rt") / "records.jsonl"
        emit_jsonl(records, path)
        assert parse_jsonl(path) == records

    def test_thousand_record_round_trip(self, tmp_path):
        records = [
            ConversationRecord(system=SYSTEM_PROMPT, user=f"title {i}\n\nbody {i}",
                               assistant=f"dev{i % 7}@x.io")
            for i in range(1000)
        ]
        path = tmp_path / "bulk.jsonl"
        assert emit_jsonl(records, path) == 1000
        assert parse_jsonl(path) == records

    def test_reference_record_parses(self, tmp_path):
        line = json.dumps({
            "system": "You are an expert bug triager.",
            "user": "Title: App crashes when saving.\nDescription: Steps to reproduce...",
            "assistant": "dev@example.com",
        })
        path = tmp_path / "reference.jsonl"
        path.write_text(line + "\n", encoding="utf-8")
        records = parse_jsonl(path)
        assert len(records) == 1
        assert records[0].assistant == "dev@example.com"
        assert records[0].system == "You are an expert bug triager."

    def test_missing_role(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"system": "s", "user": "u"}\n', encoding="utf-8")
        with pytest.raises(MissingRole) as err:
            parse_jsonl(path)
        assert err.value.line == 1 and err.value.role == "assistant"

    def test_extra_key_is_malformed(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"system": "s", "user": "u", "assistant": "a", "note": "x"}\n',
                        encoding="utf-8")
        with pytest.raises(MalformedLine):
            parse_jsonl(path)

    def test_trailing_blank_lines_tolerated(self, tmp_path):
        rec = ConversationRecord(system=SYSTEM_PROMPT, user="u", assistant="a")
        path = tmp_path / "trail.jsonl"
        emit_jsonl([rec], path)
        path.write_text(path.read_text(encoding="utf-8") + "\n\n", encoding="utf-8")
        assert parse_jsonl(path) == [rec]

    def test_interior_blank_line_rejected(self, tmp_path):
        path = tmp_path / "gap.jsonl"
        path.write_text(
            '{"system": "s", "user": "u", "assistant": "a"}\n\n'
            '{"system": "s", "user": "u", "assistant": "a"}\n',
            encoding="utf-8",
        )
        with pytest.raises(MalformedLine) as err:
            parse_jsonl(path)
        assert err.value.line == 2
