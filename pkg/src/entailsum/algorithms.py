"""Faithfulness scoring algorithms.

The central routine, ``infuse_sentence``, retrieves a variable-size premise
for one summary sentence: document sentences are ranked by bidirectional
entailment, admitted one at a time in rank order, and expansion stops at the
first step where the neutral-class probability stops falling. The baselines
``fulldoc``, ``summac_zs`` and ``sentli`` share the same scorer contract.

All functions are pure given a scorer: per-sentence evaluations can run
concurrently and results never depend on scheduling.
"""

from __future__ import annotations

import enum
from collections.abc import Sequence
from dataclasses import dataclass

from .core import Document, NliVerdict, Sentence, Summary
from .scorers import Scorer, ScoreRequest


class StopReason(enum.Enum):
    """Why premise expansion ended."""

    NEUTRAL_INCREASE = "neutral_increase"
    EXHAUSTED = "exhausted"
    TOKEN_BUDGET = "token_budget"


@dataclass(frozen=True)
class RetrievalConfig:
    """Knobs shared by the retrieval-based scorers.

    ``fixed_k`` pins the premise size for the fixed-k variant;
    ``max_premise_tokens`` caps incremental expansion; ``use_reverse``
    toggles the reverse-direction re-weighting of the ranking;
    ``chunk_budget`` sizes the whole-document chunks.
    """

    fixed_k: int | None = None
    max_premise_tokens: int = 500
    use_reverse: bool = True
    chunk_budget: int = 500

    def __post_init__(self) -> None:
        if self.fixed_k is not None and self.fixed_k < 1:
            raise ValueError("fixed_k must be >= 1 when present")
        if self.max_premise_tokens < 1:
            raise ValueError("max_premise_tokens must be >= 1")
        if self.chunk_budget < 1:
            raise ValueError("chunk_budget must be >= 1")


@dataclass(frozen=True)
class EntailmentColumn:
    """Both-direction verdicts for one hypothesis against every document
    sentence, plus the re-weighted values used for ranking.

    ``reweighted[m]`` is forward + reverse entailment when the reverse
    direction was scored, otherwise the forward entailment alone; values
    therefore live in [0, 2].
    """

    forward: tuple[NliVerdict, ...]
    reverse: tuple[NliVerdict, ...] | None
    reweighted: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "forward", tuple(self.forward))
        if not self.forward:
            raise ValueError("empty entailment column")
        if self.reverse is not None:
            object.__setattr__(self, "reverse", tuple(self.reverse))
            if len(self.reverse) != len(self.forward):
                raise ValueError("forward/reverse length mismatch")
        object.__setattr__(self, "reweighted", tuple(self.reweighted))
        if len(self.reweighted) != len(self.forward):
            raise ValueError("reweighted length mismatch")
        for m, value in enumerate(self.reweighted):
            expect = self.forward[m].entailment
            if self.reverse is not None:
                expect += self.reverse[m].entailment
            if value != expect:
                raise ValueError(
                    f"reweighted[{m}] = {value!r} does not equal the "
                    f"entailment sum {expect!r}"
                )


@dataclass(frozen=True)
class EntailmentMatrix:
    """One column per summary unit; column m-axis follows document order."""

    columns: tuple[EntailmentColumn, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "columns", tuple(self.columns))
        if not self.columns:
            raise ValueError("empty entailment matrix")

    @classmethod
    def build(
        cls,
        doc: Document,
        summary: Summary,
        scorer: Scorer,
        use_reverse: bool = True,
    ) -> "EntailmentMatrix":
        return cls(
            tuple(
                build_matrix(doc, unit.sentence, scorer, use_reverse)
                for unit in summary.units
            )
        )


@dataclass(frozen=True)
class RetrievalTrace:
    """Record of one incremental-retrieval run.

    ``neutral_sequence`` holds one value per context-level scoring step
    executed, including the step that triggered a stop; ``selected_count``
    is the size of the returned premise.
    """

    ranked_indices: tuple[int, ...]
    selected_count: int
    neutral_sequence: tuple[float, ...]
    final_entailment: float
    stop_reason: StopReason

    def __post_init__(self) -> None:
        object.__setattr__(self, "ranked_indices", tuple(self.ranked_indices))
        object.__setattr__(self, "neutral_sequence", tuple(self.neutral_sequence))
        if not 1 <= self.selected_count <= len(self.ranked_indices):
            raise ValueError(
                f"selected_count {self.selected_count} outside "
                f"[1, {len(self.ranked_indices)}]"
            )
        if not 0.0 <= self.final_entailment <= 1.0:
            raise ValueError("final_entailment outside [0, 1]")


def build_matrix(
    doc: Document,
    hypothesis: Sentence,
    scorer: Scorer,
    use_reverse: bool = True,
) -> EntailmentColumn:
    """Score the hypothesis against every document sentence.

    Issues exactly 2M requests (forward then reverse) when ``use_reverse``
    is on, M otherwise, in a single batch. Scorer failures propagate with
    the failing pair identified by the scorer's own error.
    """
    forward_reqs = [ScoreRequest(s.text, hypothesis.text) for s in doc.sentences]
    if use_reverse:
        reverse_reqs = [ScoreRequest(hypothesis.text, s.text) for s in doc.sentences]
        verdicts = scorer.score_batch(forward_reqs + reverse_reqs)
        forward = tuple(verdicts[: len(doc)])
        reverse = tuple(verdicts[len(doc):])
        reweighted = tuple(
            f.entailment + r.entailment for f, r in zip(forward, reverse)
        )
        return EntailmentColumn(forward, reverse, reweighted)
    forward = tuple(scorer.score_batch(forward_reqs))
    return EntailmentColumn(forward, None, tuple(f.entailment for f in forward))


def rank_sentences(reweighted: Sequence[float]) -> list[int]:
    """Document-sentence indices ordered by re-weighted entailment,
    non-increasing; ties go to the smaller index."""
    values = list(reweighted)
    if not values:
        raise ValueError("empty column")
    return sorted(range(len(values)), key=lambda m: (-values[m], m))


def _top_k(values: Sequence[float], k: int) -> list[int]:
    return rank_sentences(values)[:k]


def infuse_sentence(
    doc: Document,
    hypothesis: Sentence,
    scorer: Scorer,
    config: RetrievalConfig = RetrievalConfig(),
) -> tuple[float, RetrievalTrace]:
    """Incremental variable-premise entailment for one summary sentence.

    Admitted sentences are concatenated in rank order (single space) and the
    growing premise is re-scored after each admission. The first ranked
    sentence is always admitted; from the second step on, a neutral
    probability that fails to drop (u_i >= u_{i-1}) stops expansion and the
    previous step's entailment and premise are returned. Exhausting the
    ranking or hitting the token budget returns the last computed
    entailment with the matching stop reason.
    """
    column = build_matrix(doc, hypothesis, scorer, config.use_reverse)
    ranked = rank_sentences(column.reweighted)

    premise_parts: list[str] = []
    premise_tokens = 0
    neutral_seq: list[float] = []
    prev_neutral = 0.0
    prev_entailment = 0.0
    selected = 0
    final_entailment = 0.0
    stop_reason = StopReason.EXHAUSTED
    for step, doc_idx in enumerate(ranked, start=1):
        sent = doc.sentences[doc_idx]
        if premise_parts and premise_tokens + sent.token_count > config.max_premise_tokens:
            stop_reason = StopReason.TOKEN_BUDGET
            break
        premise_parts.append(sent.text)
        premise_tokens += sent.token_count
        verdict = scorer.score(
            ScoreRequest(" ".join(premise_parts), hypothesis.text)
        )
        neutral_seq.append(verdict.neutral)
        if step >= 2 and verdict.neutral >= prev_neutral:
            selected = step - 1
            final_entailment = prev_entailment
            stop_reason = StopReason.NEUTRAL_INCREASE
            break
        prev_neutral = verdict.neutral
        prev_entailment = verdict.entailment
        selected = step
        final_entailment = verdict.entailment

    trace = RetrievalTrace(
        ranked_indices=tuple(ranked),
        selected_count=selected,
        neutral_sequence=tuple(neutral_seq),
        final_entailment=final_entailment,
        stop_reason=stop_reason,
    )
    return final_entailment, trace


def infuse_k(
    doc: Document,
    hypothesis: Sentence,
    scorer: Scorer,
    k: int,
    config: RetrievalConfig = RetrievalConfig(),
) -> float:
    """Fixed-size variant: premise = top-min(k, M) ranked sentences, scored
    once at context level."""
    if k < 1:
        raise ValueError("k must be >= 1")
    column = build_matrix(doc, hypothesis, scorer, config.use_reverse)
    chosen = rank_sentences(column.reweighted)[: min(k, len(doc))]
    premise = " ".join(doc.sentences[i].text for i in chosen)
    return scorer.score(ScoreRequest(premise, hypothesis.text)).entailment


def chunk_document(doc: Document, budget: int) -> list[str]:
    """Sentence-aligned chunks, each at most ``budget`` whitespace tokens;
    a single over-budget sentence forms its own chunk."""
    if budget < 1:
        raise ValueError("chunk budget must be >= 1")
    chunks: list[str] = []
    parts: list[str] = []
    tokens = 0
    for sent in doc.sentences:
        if parts and tokens + sent.token_count > budget:
            chunks.append(" ".join(parts))
            parts, tokens = [], 0
        parts.append(sent.text)
        tokens += sent.token_count
    if parts:
        chunks.append(" ".join(parts))
    return chunks


def fulldoc(
    doc: Document,
    summary: Summary,
    scorer: Scorer,
    config: RetrievalConfig = RetrievalConfig(),
) -> float:
    """Whole-document baseline: per summary sentence, average the entailment
    over document chunks; mean-pool the sentence scores."""
    chunks = chunk_document(doc, config.chunk_budget)
    sentence_scores = []
    for unit in summary.units:
        verdicts = scorer.score_batch(
            [ScoreRequest(chunk, unit.sentence.text) for chunk in chunks]
        )
        sentence_scores.append(
            sum(v.entailment for v in verdicts) / len(verdicts)
        )
    return aggregate_summary(sentence_scores)


def summac_zs(doc: Document, hypothesis: Sentence, scorer: Scorer) -> float:
    """Single-sentence baseline: the best forward entailment over all
    document sentences, with no length or position filtering."""
    verdicts = scorer.score_batch(
        [ScoreRequest(s.text, hypothesis.text) for s in doc.sentences]
    )
    return max(v.entailment for v in verdicts)


def sentli(
    doc: Document,
    hypothesis: Sentence,
    scorer: Scorer,
    k: int = 5,
) -> float:
    """Fixed-context baseline: the union of the top-k forward-entailment and
    top-k forward-contradiction sentences (k per list), deduplicated and
    ordered by document position, scored once at context level."""
    if k < 1:
        raise ValueError("k must be >= 1")
    verdicts = scorer.score_batch(
        [ScoreRequest(s.text, hypothesis.text) for s in doc.sentences]
    )
    by_entailment = _top_k([v.entailment for v in verdicts], k)
    by_contradiction = _top_k([v.contradiction for v in verdicts], k)
    chosen = sorted(set(by_entailment) | set(by_contradiction))
    premise = " ".join(doc.sentences[i].text for i in chosen)
    return scorer.score(ScoreRequest(premise, hypothesis.text)).entailment


def aggregate_summary(sentence_scores: Sequence[float]) -> float:
    """Mean pooling of per-sentence scores into a summary score."""
    scores = list(sentence_scores)
    if not scores:
        raise ValueError("no sentence scores to aggregate")
    return sum(scores) / len(scores)


def aggregate_subsentences(sub_scores: Sequence[float]) -> float:
    """Sub-sentence scores combine with min: one bad part sinks the
    sentence, mirroring how sentence labels roll up to summary labels."""
    scores = list(sub_scores)
    if not scores:
        raise ValueError("no sub-sentence scores to aggregate")
    return min(scores)
