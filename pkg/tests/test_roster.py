from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from triage.backends import ByteTokenizer
from triage.errors import EmptyRoster, TokenizationFailure
from triage.ingest import normalize_identifier, split
from triage.roster import Roster, build_roster, load_roster, save_roster, validate_identifier
from triage.trie import compile_trie

from conftest import make_corpus, make_issue

TOK = ByteTokenizer()


class TestBuildRoster:
    def test_dedup_stable_order(self):
        train = [make_issue(f"b{i}", dev) for i, dev in enumerate(["a@x.io", "b@x.io", "a@x.io", "c@x.io"])]
        roster = build_roster(train)
        assert roster.members == ("a@x.io", "b@x.io", "c@x.io")
        assert roster.source == "training_labels"

    def test_union_with_official(self):
        train = [make_issue("b1", "a@x.io")]
        roster = build_roster(train, official=["b@x.io"])
        assert roster.members == ("a@x.io", "b@x.io")
        assert roster.source == "union"

    def test_official_only(self):
        roster = build_roster([], official=["Solo@X.io"])
        assert roster.members == ("solo@x.io",)
        assert roster.source == "official_list"

    def test_empty_roster_rejected(self):
        with pytest.raises(EmptyRoster):
            build_roster([])

    def test_no_leakage_from_other_splits(self):
        issues = make_corpus({f"dev{i}@x.io": 12 for i in range(15)})
        issues.append(make_issue("bug-test-only", "stranger@x.io"))
        train, val, test = split(issues)
        roster = build_roster(train)
        train_labels = {rec.assignee for rec in train}
        outside_only = {rec.assignee for rec in val + test} - train_labels
        assert set(roster.members) == train_labels
        assert not outside_only & set(roster.members)

    def test_membership_and_iteration(self):
        roster = Roster(members=("a@x.io", "bee"), source="training_labels")
        assert "a@x.io" in roster and "zz" not in roster
        assert list(roster) == ["a@x.io", "bee"]
        assert len(roster) == 2


class TestValidateIdentifier:
    @pytest.mark.parametrize("good", [
        "alice.dev@mozilla.org",
        "dev@example.com",
        "a+b_c%d@sub.domain-x.io",
        "handle42",
        "a.b-c_d",
        "x2",
    ])
    def test_accepts(self, good):
        assert validate_identifier(good)

    @pytest.mark.parametrize("bad", [
        "None", "none",          # pad sentinel, denylisted after normalization
        "@nodomain",
        "a",                      # handle too short
        "_underscore.start",
        "has space",
        "UPPER@CASE.COM",         # not normalized
        "a@x",                    # final label too short
        "garbage!!",
        "",
    ])
    def test_rejects(self, bad):
        assert not validate_identifier(bad)

    def test_pad_token_never_validates(self):
        assert not validate_identifier(normalize_identifier("None"))

    @given(st.text(min_size=1).filter(lambda s: s.strip()))
    def test_invariant_under_normalization(self, raw):
        once = normalize_identifier(raw)
        assert validate_identifier(once) == validate_identifier(normalize_identifier(once))


class TestRosterFile:
    def test_round_trip_with_comments(self, tmp_path):
        roster = build_roster([make_issue("b1", "a@x.io"), make_issue("b2", "b@x.io")])
        path = tmp_path / "roster.txt"
        save_roster(roster, path)
        text = path.read_text(encoding="utf-8")
        assert text.startswith("#")
        loaded = load_roster(path)
        assert loaded.members == roster.members
        assert loaded.source == roster.source


class TestCompileTrie:
    def test_shared_prefix_structure(self):
        roster = Roster(members=("ab", "ac"), source="training_labels")
        trie = compile_trie(roster, TOK)
        a = ord("a")
        assert set(trie.root.children) == {a}
        assert set(trie.root.children[a].children) == {ord("b"), ord("c")}
        assert trie.root.children[a].terminal is None
        assert trie.root.children[a].children[ord("b")].terminal == "ab"

    def test_prefix_terminal_flagged(self):
        roster = Roster(members=("a1", "a1b"), source="training_labels")
        trie = compile_trie(roster, TOK)
        node = trie.root.children[ord("a")].children[ord("1")]
        assert node.terminal == "a1"
        assert node.children  # the longer member continues below a terminal

    def test_full_scale_bijection(self):
        members = tuple(f"dev{i:04d}@eclipse.org" for i in range(4017))
        roster = Roster(members=members, source="training_labels")
        trie = compile_trie(roster, TOK)
        terminals = list(trie.terminals())
        assert len(terminals) == len(members) == trie.size
        assert {m for _, m in terminals} == set(members)
        for path, member in terminals:
            assert TOK.detokenize(path) == member
            assert tuple(TOK.tokenize(member)) == path

    def test_colliding_tokenizations_rejected(self):
        class LossyTokenizer:
            name = "lossy"

            def tokenize(self, text):
                return [1, 2, 3]

            def detokenize(self, ids):
                return "?"

        roster = Roster(members=("a@x.io", "b@x.io"), source="training_labels")
        with pytest.raises(TokenizationFailure):
            compile_trie(roster, LossyTokenizer())
