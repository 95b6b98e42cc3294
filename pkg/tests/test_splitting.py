import logging

import pytest

from entailsum.algorithms import RetrievalConfig, aggregate_summary, infuse_sentence
from entailsum.core import Sentence, SummaryUnit
from entailsum.splitting import (
    IdentitySplitter,
    SplitCache,
    SplitResult,
    infuse_sub,
    split_sentence,
)

from conftest import make_doc, random_table_scorer


class TableSplitter:
    """Test splitter backed by an explicit text -> parts table."""

    def __init__(self, table, splitter_id="table-split"):
        self.table = dict(table)
        self.splitter_id = splitter_id
        self.calls = 0

    def split_text(self, text):
        self.calls += 1
        return list(self.table.get(text, [text]))


class TestSplitSentence:
    def test_two_part_split(self):
        sent = Sentence(
            0, "Heritage auctions offered the gray jacket featuring a black zigzag applique"
        )
        splitter = TableSplitter(
            {
                sent.text: [
                    "Heritage auctions offered the gray jacket.",
                    "The gray jacket featured a black zigzag applique.",
                ]
            }
        )
        result = split_sentence(sent, splitter)
        assert [p.text for p in result.parts] == [
            "Heritage auctions offered the gray jacket.",
            "The gray jacket featured a black zigzag applique.",
        ]
        assert result.original is sent

    def test_no_split_returns_original(self):
        sent = Sentence(0, "Change is a problem for many disabled people.")
        result = split_sentence(sent, IdentitySplitter())
        assert result.parts == (sent,)

    def test_identity_on_any_sentence(self):
        sent = Sentence(2, "Any sentence at all.")
        assert split_sentence(sent, IdentitySplitter()).parts == (sent,)

    def test_single_rewritten_part_collapses_to_identity(self):
        sent = Sentence(0, "Original wording.")
        splitter = TableSplitter({sent.text: ["Rewritten wording."]})
        assert split_sentence(sent, splitter).parts == (sent,)

    def test_runaway_output_rejected(self, caplog):
        sent = Sentence(0, "short input")
        blob = " ".join(["word"] * 20)
        splitter = TableSplitter({sent.text: [blob, blob]})
        with caplog.at_level(logging.WARNING):
            result = split_sentence(sent, splitter)
        assert result.parts == (sent,)
        assert any("runaway" in r.message for r in caplog.records)

    def test_blank_parts_filtered(self):
        sent = Sentence(0, "keep me")
        splitter = TableSplitter({sent.text: ["  ", "first half", "second half"]})
        result = split_sentence(sent, splitter)
        assert [p.text for p in result.parts] == ["first half", "second half"]

    def test_empty_result_rejected_at_type_level(self):
        with pytest.raises(ValueError):
            SplitResult(Sentence(0, "x"), ())

    def test_deterministic_for_fixed_splitter(self):
        sent = Sentence(0, "alpha and beta")
        splitter = TableSplitter({sent.text: ["alpha.", "beta."]})
        first = split_sentence(sent, splitter)
        second = split_sentence(sent, splitter)
        assert [p.text for p in first.parts] == [p.text for p in second.parts]


class TestSplitCache:
    def test_inner_called_once_per_text(self):
        inner = TableSplitter({"x": ["a.", "b."]})
        cache = SplitCache(inner)
        assert cache.split_text("x") == ["a.", "b."]
        assert cache.split_text("x") == ["a.", "b."]
        assert inner.calls == 1

    def test_persistence(self, tmp_path):
        path = tmp_path / "splits.jsonl"
        inner = TableSplitter({"x": ["a.", "b."]})
        SplitCache(inner, path).split_text("x")

        inner2 = TableSplitter({"x": ["a.", "b."]})
        cache2 = SplitCache(inner2, path)
        assert cache2.split_text("x") == ["a.", "b."]
        assert inner2.calls == 0


class TestInfuseSub:
    def test_min_aggregation(self):
        doc = make_doc(3)
        scorer = random_table_scorer(4)
        unit = SummaryUnit(Sentence(0, "alpha and beta"))
        splitter = TableSplitter({"alpha and beta": ["alpha", "beta"]})
        score, traces = infuse_sub(doc, unit, scorer, splitter)
        part_scores = [
            infuse_sentence(doc, Sentence(i, t), random_table_scorer(4))[0]
            for i, t in enumerate(["alpha", "beta"])
        ]
        assert score == min(part_scores)
        assert len(traces) == 2

    def test_single_part_equals_infuse_sentence(self):
        doc = make_doc(4)
        unit = SummaryUnit(Sentence(0, "whole claim"))
        score, traces = infuse_sub(
            doc, unit, random_table_scorer(5), IdentitySplitter()
        )
        expected, trace = infuse_sentence(
            doc, unit.sentence, random_table_scorer(5)
        )
        assert score == expected
        assert traces == (trace,)

    def test_identity_everywhere_degenerates_to_infuse(self):
        doc = make_doc(5)
        units = [SummaryUnit(Sentence(i, f"claim number {i}")) for i in range(3)]
        sub_scores = [
            infuse_sub(doc, u, random_table_scorer(6), IdentitySplitter())[0]
            for u in units
        ]
        plain_scores = [
            infuse_sentence(doc, u.sentence, random_table_scorer(6))[0]
            for u in units
        ]
        assert sub_scores == plain_scores
        assert aggregate_summary(sub_scores) == aggregate_summary(plain_scores)

    def test_custom_aggregator(self):
        doc = make_doc(3)
        unit = SummaryUnit(Sentence(0, "alpha and beta"))
        splitter = TableSplitter({"alpha and beta": ["alpha", "beta"]})
        score_mean, _ = infuse_sub(
            doc, unit, random_table_scorer(4), splitter, aggregate=aggregate_summary
        )
        score_min, _ = infuse_sub(doc, unit, random_table_scorer(4), splitter)
        assert score_min <= score_mean
