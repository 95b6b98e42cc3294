import numpy as np
import pytest

from entailsum.analysis import (
    FusionRecord,
    corpus_stats,
    coverage_density,
    extractive_fragments,
    fusion_bucket_table,
    greedy_fusion,
    premise_size_sweep,
    rouge2_recall,
)
from entailsum.core import (
    BenchmarkExample,
    Document,
    FaithfulLabel,
    Sentence,
    Summary,
)
from entailsum.scorers import LexicalScorer

from oracles import brute_force_fragments

F = FaithfulLabel.FAITHFUL
U = FaithfulLabel.UNFAITHFUL


class TestGreedyFusion:
    def test_verbatim_copy_selects_single_source(self):
        doc = Document.from_texts(
            ["zero topic words", "first other tokens", "second filler line",
             "the exact copied sentence", "last trailing text"]
        )
        record = greedy_fusion(doc, Sentence(0, "the exact copied sentence"))
        assert record.fused_indices == (3,)
        assert record.window == 1
        assert not record.zero_coverage

    def test_halves_of_distant_sentences(self):
        texts = ["alpha beta gamma delta"] + [f"filler{i} junk{i}" for i in range(6)]
        texts.append("omega psi chi phi")
        doc = Document.from_texts(texts)  # relevant sentences at 0 and 7
        record = greedy_fusion(doc, Sentence(0, "alpha beta omega psi"))
        assert record.fused_indices == (0, 7)
        assert record.window == 8

    def test_identical_sentences_tie_break(self):
        doc = Document.from_texts(["same words here"] * 3)
        record = greedy_fusion(doc, Sentence(0, "same words"))
        assert record.fused_indices == (0,)

    def test_zero_overlap_flag(self):
        doc = Document.from_texts(["aaa bbb", "ccc ddd"])
        record = greedy_fusion(doc, Sentence(0, "xxx yyy"))
        assert record.zero_coverage
        assert record.fused_indices == (0,)
        assert record.window == 1

    def test_multiset_semantics(self):
        # the summary repeats "win"; one doc sentence alone covers only one
        doc = Document.from_texts(["they win games", "a win streak"])
        record = greedy_fusion(doc, Sentence(0, "win win"))
        assert record.fused_indices == (0, 1)

    def test_terminates_within_bound(self):
        doc = Document.from_texts([f"tok{i} shared" for i in range(10)])
        record = greedy_fusion(doc, Sentence(0, "shared shared shared"))
        assert len(record.fused_indices) <= min(len(doc), 3)

    def test_record_invariants(self):
        with pytest.raises(ValueError):
            FusionRecord(0, (3, 1), 3)
        with pytest.raises(ValueError):
            FusionRecord(0, (1, 3), 2)


class TestCoverageDensity:
    def test_verbatim_span(self):
        doc = Document.from_texts(["start filler here", "the copied span sits here"])
        summary = Summary.from_texts(["the copied span sits here"])
        cov, dens = coverage_density(doc, summary)
        assert cov == 1.0
        assert dens == 5.0  # one fragment of length 5

    def test_disjoint_texts(self):
        doc = Document.from_texts(["aaa bbb ccc"])
        summary = Summary.from_texts(["xxx yyy zzz"])
        assert coverage_density(doc, summary) == (0.0, 0.0)

    def test_constructed_fragments(self):
        doc = Document.from_texts(["a b c d x e f y"])
        summary = Summary.from_texts(["a b c d q1 e f q2 q3 q4"])
        cov, dens = coverage_density(doc, summary)
        assert cov == pytest.approx(0.6)   # (4 + 2) / 10
        assert dens == pytest.approx(2.0)  # (16 + 4) / 10

    def test_density_bounded_by_coverage_times_length(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            a = [f"t{x}" for x in rng.integers(0, 6, size=rng.integers(1, 20))]
            s = [f"t{x}" for x in rng.integers(0, 6, size=rng.integers(1, 20))]
            doc = Document.from_texts([" ".join(a)])
            summary = Summary.from_texts([" ".join(s)])
            cov, dens = coverage_density(doc, summary)
            assert 0.0 <= cov <= 1.0
            assert dens >= 0.0
            assert dens <= cov * len(s) + 1e-9

    def test_fragments_match_brute_force(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            a = [f"t{x}" for x in rng.integers(0, 5, size=rng.integers(1, 30))]
            s = [f"t{x}" for x in rng.integers(0, 5, size=rng.integers(1, 30))]
            assert extractive_fragments(a, s) == brute_force_fragments(a, s)


class TestRouge2Recall:
    def test_identical(self):
        assert rouge2_recall("a b c d", "a b c d") == 1.0

    def test_disjoint(self):
        assert rouge2_recall("a b c", "x y z") == 0.0

    def test_partial(self):
        assert rouge2_recall("a b c d", "a b x d") == pytest.approx(1 / 3)

    def test_short_hypothesis_defined_as_zero(self):
        assert rouge2_recall("a b c", "a") == 0.0

    def test_clipping(self):
        # hypothesis repeats a bigram more often than the premise has it
        assert rouge2_recall("a b", "a b a b") == pytest.approx(1 / 3)


def _example(doc_texts, summary_texts, label, sentence_labels=None, dataset="demo", id="e1"):
    return BenchmarkExample(
        id=id,
        dataset=dataset,
        document=Document.from_texts(doc_texts),
        summary=Summary.from_texts(summary_texts),
        label=label,
        sentence_labels=tuple(sentence_labels) if sentence_labels else None,
    )


class TestPremiseSizeSweep:
    def _corpus(self):
        return [
            _example(
                ["alpha beta", "gamma delta", "epsilon zeta"],
                ["alpha gamma epsilon"],
                U,
                [U],
            )
        ]

    def test_single_unfaithful_sentence_equals_its_scores(self):
        sweep = premise_size_sweep(self._corpus(), LexicalScorer(), [1, 2, 3])
        assert sweep[1] == pytest.approx(0.3)
        assert sweep[2] == pytest.approx(0.6)
        assert sweep[3] == pytest.approx(0.9)

    def test_saturation_beyond_document_length(self):
        sweep = premise_size_sweep(self._corpus(), LexicalScorer(), [3, 4, 9])
        assert sweep[4] == sweep[3]
        assert sweep[9] == sweep[3]

    def test_non_decreasing_with_lexical_scorer(self):
        sweep = premise_size_sweep(self._corpus(), LexicalScorer(), [1, 2, 3, 4])
        values = [sweep[k] for k in sorted(sweep)]
        assert values == sorted(values)

    def test_unlabelled_examples_rejected(self):
        corpus = [_example(["alpha"], ["alpha"], F)]
        with pytest.raises(ValueError):
            premise_size_sweep(corpus, LexicalScorer(), [1])


class TestTables:
    def test_fusion_buckets(self):
        records = [
            FusionRecord(0, (0,), 1),
            FusionRecord(1, (0, 3), 4),
            FusionRecord(2, (0, 9), 10),
            FusionRecord(3, (0, 5, 20), 21),
        ]
        table = fusion_bucket_table(records)
        assert table["1"]["<=5"] == 1
        assert table["2"]["<=5"] == 1
        assert table["2"]["6-14"] == 1
        assert table[">=3"][">=15"] == 1

    def test_corpus_stats_grouping(self):
        examples = [
            _example(["a b c"], ["a b"], F, dataset="x", id="e1"),
            _example(["d e f g"], ["d e"], F, dataset="x", id="e2"),
            _example(["h i"], ["h"], F, dataset="y", id="e3"),
        ]
        stats = corpus_stats(examples)
        assert stats["x"]["examples"] == 2
        assert stats["x"]["doc_tokens"] == pytest.approx(3.5)
        assert stats["y"]["summary_tokens"] == 1.0
        assert stats["x"]["coverage"] == 1.0
