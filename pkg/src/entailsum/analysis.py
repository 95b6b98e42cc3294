"""Corpus diagnostics: sentence-fusion statistics, extractive
coverage/density, and lexical-overlap and premise-length bias probes.

Token handling matches the lexical scorer (lowercased alphanumeric runs);
overlap counting uses multiset semantics, so repeated content words carry
weight.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from .algorithms import RetrievalConfig, build_matrix, rank_sentences
from .core import BenchmarkExample, Document, FaithfulLabel, Sentence, Summary
from .scorers import Scorer, ScoreRequest, lexical_tokens


@dataclass(frozen=True)
class FusionRecord:
    """Which document sentences one summary sentence draws on.

    ``window`` is the index span covered by the selected sentences
    (max - min + 1, so 1 for a single sentence); ``zero_coverage`` marks
    summary sentences sharing no token with any document sentence.
    """

    summary_index: int
    fused_indices: tuple[int, ...]
    window: int
    zero_coverage: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "fused_indices", tuple(self.fused_indices))
        if not self.fused_indices:
            raise ValueError("fused_indices is empty")
        if list(self.fused_indices) != sorted(set(self.fused_indices)):
            raise ValueError("fused_indices must be sorted and unique")
        expect = self.fused_indices[-1] - self.fused_indices[0] + 1
        if self.window != expect:
            raise ValueError(f"window {self.window} != index span {expect}")


def _covered(target: Counter, combined: Counter) -> int:
    return sum(min(count, combined[tok]) for tok, count in target.items())


def greedy_fusion(doc: Document, summary_sentence: Sentence) -> FusionRecord:
    """Greedily pick document sentences that maximally grow the covered
    summary-token count (multiset semantics); stop at zero marginal gain,
    ties to the smaller index.

    A summary sentence with no token overlap at all records the single
    best-overlap sentence (index 0 after ties) with the zero-coverage flag.
    """
    target = Counter(lexical_tokens(summary_sentence.text))
    sent_tokens = [Counter(lexical_tokens(s.text)) for s in doc.sentences]

    selected: list[int] = []
    combined: Counter = Counter()
    covered = 0
    while len(selected) < len(doc):
        best_gain = 0
        best_idx = -1
        for m, tokens in enumerate(sent_tokens):
            if m in selected:
                continue
            gain = _covered(target, combined + tokens) - covered
            if gain > best_gain:
                best_gain = gain
                best_idx = m
        if best_idx < 0:
            break
        selected.append(best_idx)
        combined += sent_tokens[best_idx]
        covered += best_gain

    if not selected:
        overlaps = [_covered(target, tokens) for tokens in sent_tokens]
        best = max(range(len(overlaps)), key=lambda m: (overlaps[m], -m))
        return FusionRecord(summary_sentence.index, (best,), 1, zero_coverage=True)

    fused = tuple(sorted(selected))
    window = fused[-1] - fused[0] + 1
    return FusionRecord(summary_sentence.index, fused, window)


def extractive_fragments(
    article_tokens: Sequence[str], summary_tokens: Sequence[str]
) -> list[list[str]]:
    """Greedy left-to-right fragment extraction.

    At each summary position the fragment is the longest token run shared
    with the article, starting anywhere in it; the cursor then jumps past
    the fragment (or one token forward on no match).
    """
    a = list(article_tokens)
    s = list(summary_tokens)
    fragments: list[list[str]] = []
    i = 0
    while i < len(s):
        best = 0
        for j in range(len(a)):
            if a[j] != s[i]:
                continue
            length = 0
            while (
                i + length < len(s)
                and j + length < len(a)
                and s[i + length] == a[j + length]
            ):
                length += 1
            if length > best:
                best = length
        if best:
            fragments.append(s[i : i + best])
            i += best
        else:
            i += 1
    return fragments


def coverage_density(doc: Document, summary: Summary) -> tuple[float, float]:
    """Extractiveness statistics over greedy shared fragments.

    coverage = mean fragment-token fraction of the summary;
    density = mean squared fragment length per summary token.
    A summary without tokens yields (0.0, 0.0).
    """
    article = lexical_tokens(" ".join(s.text for s in doc.sentences))
    summary_toks = lexical_tokens(" ".join(u.sentence.text for u in summary.units))
    if not summary_toks:
        return 0.0, 0.0
    fragments = extractive_fragments(article, summary_toks)
    total = len(summary_toks)
    coverage = sum(len(f) for f in fragments) / total
    density = sum(len(f) ** 2 for f in fragments) / total
    return coverage, density


def rouge2_recall(premise: str, hypothesis: str) -> float:
    """Clipped bigram overlap divided by the hypothesis bigram count;
    defined as 0 when the hypothesis has fewer than two tokens."""
    hyp = lexical_tokens(hypothesis)
    if len(hyp) < 2:
        return 0.0
    prem = lexical_tokens(premise)
    hyp_bigrams = Counter(zip(hyp, hyp[1:]))
    prem_bigrams = Counter(zip(prem, prem[1:]))
    clipped = sum(
        min(count, prem_bigrams[bg]) for bg, count in hyp_bigrams.items()
    )
    return clipped / sum(hyp_bigrams.values())


def premise_size_sweep(
    examples: Iterable[BenchmarkExample],
    scorer: Scorer,
    ks: Sequence[int],
    config: RetrievalConfig = RetrievalConfig(),
) -> dict[int, float]:
    """Mean entailment of unfaithful summary sentences as the premise grows.

    For each k, the premise is the top-k ranked document sentences (k
    capped at the document length). Examples without per-sentence labels
    are skipped; raises when no unfaithful sentence is available at all.
    """
    ks = sorted(set(ks))
    if not ks or ks[0] < 1:
        raise ValueError("ks must be positive")
    totals = {k: 0.0 for k in ks}
    count = 0
    for example in examples:
        if example.sentence_labels is None:
            continue
        for unit, label in zip(example.summary.units, example.sentence_labels):
            if label is not FaithfulLabel.UNFAITHFUL:
                continue
            column = build_matrix(
                example.document, unit.sentence, scorer, config.use_reverse
            )
            ranked = rank_sentences(column.reweighted)
            count += 1
            for k in ks:
                chosen = ranked[: min(k, len(example.document))]
                premise = " ".join(
                    example.document.sentences[i].text for i in chosen
                )
                verdict = scorer.score(ScoreRequest(premise, unit.sentence.text))
                totals[k] += verdict.entailment
    if count == 0:
        raise ValueError("no unfaithful sentences with labels in the corpus")
    return {k: totals[k] / count for k in ks}


FUSED_BUCKETS = ("1", "2", ">=3")
WINDOW_BUCKETS = ("<=5", "6-14", ">=15")


def fusion_bucket_table(records: Iterable[FusionRecord]) -> dict[str, dict[str, int]]:
    """Cross-tabulate fusion records into fused-count x window-size buckets."""
    table = {fb: {wb: 0 for wb in WINDOW_BUCKETS} for fb in FUSED_BUCKETS}
    for rec in records:
        fused = len(rec.fused_indices)
        fb = "1" if fused == 1 else "2" if fused == 2 else ">=3"
        wb = "<=5" if rec.window <= 5 else "6-14" if rec.window <= 14 else ">=15"
        table[fb][wb] += 1
    return table


def corpus_stats(examples: Iterable[BenchmarkExample]) -> dict[str, dict[str, float]]:
    """Per-dataset averages: document tokens, summary sentences, summary
    tokens, coverage, density."""
    grouped: dict[str, list[BenchmarkExample]] = {}
    for example in examples:
        grouped.setdefault(example.dataset, []).append(example)
    out: dict[str, dict[str, float]] = {}
    for dataset, group in sorted(grouped.items()):
        doc_tokens = [sum(s.token_count for s in ex.document.sentences) for ex in group]
        sum_sents = [len(ex.summary) for ex in group]
        sum_tokens = [
            sum(u.sentence.token_count for u in ex.summary.units) for ex in group
        ]
        covs, denss = zip(*(coverage_density(ex.document, ex.summary) for ex in group))
        n = len(group)
        out[dataset] = {
            "examples": float(n),
            "doc_tokens": sum(doc_tokens) / n,
            "summary_sentences": sum(sum_sents) / n,
            "summary_tokens": sum(sum_tokens) / n,
            "coverage": sum(covs) / n,
            "density": sum(denss) / n,
        }
    return out
