"""Shared domain types for document-summary faithfulness scoring.

Everything here is an immutable value object: all invariants are checked at
construction and violations raise ``ValueError`` rather than being clamped
or repaired silently.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

PROBABILITY_SUM_TOLERANCE = 1e-4


class FaithfulLabel(enum.Enum):
    """Binary faithfulness judgement for a summary or a summary sentence."""

    FAITHFUL = "faithful"
    UNFAITHFUL = "unfaithful"


class ErrorType(enum.Enum):
    """Fine-grained unfaithfulness categories for sentence-level annotations."""

    PRED_E = "PredE"    # predicate inconsistent with the document
    ENT_E = "EntE"      # primary arguments of the predicate are wrong
    CIRC_E = "CircE"    # circumstantial detail (time, place, name) is wrong
    COREF_E = "CorefE"  # pronoun or reference with a bad or missing antecedent
    LINK_E = "LinkE"    # sentences incorrectly linked together
    OUT_E = "OutE"      # content not present in the document at all
    GRAM_E = "GramE"    # unreadable because of grammar


class AnnotationScheme(enum.Enum):
    """How a dataset's raw faithfulness annotations are encoded."""

    LIKERT = "likert"       # single 1..5 consistency score
    MAJORITY = "majority"   # per-annotator binary votes


@dataclass(frozen=True)
class Sentence:
    """One sentence plus its 0-based position within its parent.

    ``token_count`` is the whitespace-token count; when constructed with the
    default it is computed from ``text``.
    """

    index: int
    text: str
    token_count: int = -1

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError(f"sentence index must be >= 0, got {self.index}")
        if not self.text.strip():
            raise ValueError("sentence text is empty")
        if self.token_count < 0:
            object.__setattr__(self, "token_count", len(self.text.split()))
        if self.token_count < 1:
            raise ValueError("token_count must be >= 1")


def _check_contiguous(sentences: Sequence[Sentence], kind: str) -> None:
    for expected, sent in enumerate(sentences):
        if sent.index != expected:
            raise ValueError(
                f"{kind} sentence indices must be 0..{len(sentences) - 1} "
                f"contiguous; found index {sent.index} at position {expected}"
            )


@dataclass(frozen=True)
class Document:
    """An ordered sequence of sentences, possibly concatenated from several
    source documents (``source_count`` > 1 for multi-document tasks)."""

    sentences: tuple[Sentence, ...]
    source_count: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "sentences", tuple(self.sentences))
        if not self.sentences:
            raise ValueError("document must contain at least one sentence")
        if self.source_count < 1:
            raise ValueError("source_count must be >= 1")
        _check_contiguous(self.sentences, "document")

    def __len__(self) -> int:
        return len(self.sentences)

    @classmethod
    def from_texts(cls, texts: Iterable[str], source_count: int = 1) -> "Document":
        sents = tuple(Sentence(i, t) for i, t in enumerate(texts))
        return cls(sents, source_count)


@dataclass(frozen=True)
class SummaryUnit:
    """A summary sentence together with its simplified sub-sentences.

    ``sub_sentences`` defaults to the singleton ``(sentence,)`` when no split
    applies.
    """

    sentence: Sentence
    sub_sentences: tuple[Sentence, ...] = ()

    def __post_init__(self) -> None:
        subs = tuple(self.sub_sentences) or (self.sentence,)
        object.__setattr__(self, "sub_sentences", subs)
        # A genuine split is 0-based; the singleton default keeps the parent
        # sentence as-is, whatever its index within the summary.
        if len(subs) > 1 or subs[0] is not self.sentence:
            _check_contiguous(subs, "sub-sentence")


@dataclass(frozen=True)
class Summary:
    """An ordered, non-empty sequence of summary units."""

    units: tuple[SummaryUnit, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "units", tuple(self.units))
        if not self.units:
            raise ValueError("summary must contain at least one unit")
        _check_contiguous([u.sentence for u in self.units], "summary")

    def __len__(self) -> int:
        return len(self.units)

    @classmethod
    def from_texts(cls, texts: Iterable[str]) -> "Summary":
        units = tuple(SummaryUnit(Sentence(i, t)) for i, t in enumerate(texts))
        return cls(units)


@dataclass(frozen=True)
class NliVerdict:
    """One (entailment, neutral, contradiction) probability triple.

    Construction rejects triples outside [0, 1] or whose sum strays from 1
    by more than ``PROBABILITY_SUM_TOLERANCE``; nothing is ever clamped.
    """

    entailment: float
    neutral: float
    contradiction: float

    def __post_init__(self) -> None:
        for name in ("entailment", "neutral", "contradiction"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} probability {p!r} outside [0, 1]")
        total = self.entailment + self.neutral + self.contradiction
        if abs(total - 1.0) > PROBABILITY_SUM_TOLERANCE:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")


@dataclass(frozen=True)
class BenchmarkExample:
    """One (document, generated summary, gold label) record, optionally with
    per-sentence labels and error-type annotations."""

    id: str
    dataset: str
    document: Document
    summary: Summary
    label: FaithfulLabel
    sentence_labels: tuple[FaithfulLabel, ...] | None = None
    sentence_errors: tuple[frozenset[ErrorType], ...] | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("example id is empty")
        if self.sentence_labels is not None:
            object.__setattr__(self, "sentence_labels", tuple(self.sentence_labels))
            if len(self.sentence_labels) != len(self.summary):
                raise ValueError(
                    f"sentence_labels length {len(self.sentence_labels)} != "
                    f"summary length {len(self.summary)}"
                )
        if self.sentence_errors is not None:
            if self.sentence_labels is None:
                raise ValueError("sentence_errors requires sentence_labels")
            errors = tuple(frozenset(e) for e in self.sentence_errors)
            object.__setattr__(self, "sentence_errors", errors)
            if len(errors) != len(self.summary):
                raise ValueError(
                    f"sentence_errors length {len(errors)} != "
                    f"summary length {len(self.summary)}"
                )
            for i, errs in enumerate(errors):
                if errs and self.sentence_labels[i] is not FaithfulLabel.UNFAITHFUL:
                    raise ValueError(
                        f"sentence {i} carries error types but is not labelled "
                        "unfaithful"
                    )


def standardize_label(raw: object, scheme: AnnotationScheme) -> FaithfulLabel:
    """Map a raw dataset annotation to a binary faithfulness label.

    Likert scheme: faithful only for a consistency score of exactly 5.
    Majority scheme: faithful only when strictly more than half of the
    binary votes are 1; exact ties resolve to unfaithful.
    """
    if scheme is AnnotationScheme.LIKERT:
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ValueError(f"Likert annotation must be an int, got {raw!r}")
        if not 1 <= raw <= 5:
            raise ValueError(f"Likert score {raw} outside 1..5")
        return FaithfulLabel.FAITHFUL if raw == 5 else FaithfulLabel.UNFAITHFUL
    if scheme is AnnotationScheme.MAJORITY:
        votes = list(raw)  # type: ignore[arg-type]
        if not votes:
            raise ValueError("empty vote list")
        for v in votes:
            if isinstance(v, bool) or v not in (0, 1):
                raise ValueError(f"votes must be 0 or 1, got {v!r}")
        if 2 * sum(votes) > len(votes):
            return FaithfulLabel.FAITHFUL
        return FaithfulLabel.UNFAITHFUL
    raise ValueError(f"unknown annotation scheme: {scheme!r}")


def summary_label_from_sentences(
    sentence_labels: Sequence[FaithfulLabel],
) -> FaithfulLabel:
    """A summary is faithful iff every one of its sentences is faithful."""
    labels = list(sentence_labels)
    if not labels:
        raise ValueError("empty sentence label list")
    for label in labels:
        if not isinstance(label, FaithfulLabel):
            raise ValueError(f"expected FaithfulLabel, got {label!r}")
        if label is FaithfulLabel.UNFAITHFUL:
            return FaithfulLabel.UNFAITHFUL
    return FaithfulLabel.FAITHFUL
