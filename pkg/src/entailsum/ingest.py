"""Dataset loading: sentence segmentation and normalization of annotated
document/summary records into canonical benchmark examples.

Canonical files are JSON Lines, one record per line, schema version 1:

    {"id": str,                       # unique within the file
     "dataset": str,                  # task tag used for grouping
     "documents": [[str, ...], ...],  # one sentence list per source doc
     "summary": [str, ...],           # pre-segmented summary sentences
     "label": "faithful" | "unfaithful"
              | {"consistency": 1..5}             # Likert, faithful iff 5
              | {"votes": [0|1, ...]},            # strict-majority binary
     "source_count": int,                                    # optional
     "sentence_labels": ["faithful" | "unfaithful", ...],   # optional
     "sentence_errors": [["EntE", ...] | null, ...]}        # optional

``documents`` entries and ``summary`` may also be plain strings, in which
case they are segmented here. Multi-document inputs are concatenated in
listed order into one document. Canonical serialization always emits the
pre-segmented form with a single concatenated document list (the source
count preserved in ``source_count``), and re-serializing a loaded
canonical file reproduces it byte for byte.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from collections.abc import Iterable, Sequence
from pathlib import Path

from .core import (
    AnnotationScheme,
    BenchmarkExample,
    Document,
    ErrorType,
    FaithfulLabel,
    Sentence,
    Summary,
    SummaryUnit,
    standardize_label,
    summary_label_from_sentences,
)

log = logging.getLogger(__name__)

DATASET_SCHEMA_VERSION = 1


class DatasetError(ValueError):
    """A dataset file failed validation; the message names line and field."""


# Tokens (lowercased, sans trailing dot) that do not end a sentence.
# Deliberately excludes strings that double as common words (sat, wed, no...).
_ABBREVIATIONS = frozenset(
    """
    dr mr mrs ms prof rev gen col sgt capt lt st mt ft vs etc al
    inc ltd co corp dept univ approx fig figs eq sec vol jan feb
    apr jun jul aug sep sept oct nov dec
    e.g i.e u.s u.k p.m a.m ph.d m.d b.c a.d
    """.split()
)

# These end a sentence unless a number follows ("No. 5", "nos. 3 and 4").
_NUMERIC_ABBREVIATIONS = frozenset({"no", "nos"})

_BOUNDARY = re.compile(r"[.!?]+[\"'”’)\]]*\s+")


def _is_abbreviation(prefix: str, next_char: str) -> bool:
    """True when the text before a period ends in a known abbreviation or a
    single initial (as in middle names)."""
    word = prefix.rsplit(None, 1)[-1] if prefix.strip() else ""
    word = word.lstrip("(\"'“‘[")
    core = word[:-1] if word.endswith(".") else word
    if not core:
        return False
    if len(core) == 1 and core.isalpha():
        return True
    low = core.lower().rstrip(".")
    if low in _NUMERIC_ABBREVIATIONS:
        return next_char.isdigit()
    return low in _ABBREVIATIONS


def segment(text: str | Sequence[str]) -> list[Sentence]:
    """Split text into sentences.

    Rule-based: a sentence ends at terminal punctuation followed by
    whitespace and an uppercase letter or digit, unless the preceding word
    is a known abbreviation or single initial. Pre-segmented input (any
    non-string sequence) is passed through verbatim. Pathological text
    comes back as a single sentence.
    """
    if not isinstance(text, str):
        texts = [t for t in text if str(t).strip()]
        if not texts:
            raise ValueError("empty pre-segmented input")
        return [Sentence(i, str(t).strip()) for i, t in enumerate(texts)]
    if not text.strip():
        raise ValueError("empty text")

    pieces: list[str] = []
    start = 0
    for match in _BOUNDARY.finditer(text):
        end = match.end()
        if end >= len(text):
            break
        nxt = text[end]
        if not (nxt.isupper() or nxt.isdigit()):
            continue
        terminal = text[match.start()]
        if terminal == "." and _is_abbreviation(text[start : match.start()], nxt):
            continue
        piece = text[start:end].strip()
        if piece:
            pieces.append(piece)
        start = end
    tail = text[start:].strip()
    if tail:
        pieces.append(tail)
    if not pieces:
        pieces = [text.strip()]
    return [Sentence(i, p) for i, p in enumerate(pieces)]


def _field_error(line_no: int, fld: str, message: str) -> DatasetError:
    return DatasetError(f"line {line_no}, field {fld!r}: {message}")


def _parse_label(raw: object, line_no: int, fld: str) -> FaithfulLabel:
    if isinstance(raw, str):
        try:
            return FaithfulLabel(raw)
        except ValueError:
            raise _field_error(
                line_no, fld, f"expected 'faithful' or 'unfaithful', got {raw!r}"
            ) from None
    if isinstance(raw, dict):
        try:
            if "consistency" in raw:
                return standardize_label(raw["consistency"], AnnotationScheme.LIKERT)
            if "votes" in raw:
                return standardize_label(raw["votes"], AnnotationScheme.MAJORITY)
        except ValueError as exc:
            raise _field_error(line_no, fld, str(exc)) from None
        raise _field_error(
            line_no, fld, "raw label object needs 'consistency' or 'votes'"
        )
    raise _field_error(line_no, fld, f"unsupported label value {raw!r}")


def _segment_field(raw: object, line_no: int, fld: str) -> list[Sentence]:
    if isinstance(raw, (str, list)):
        try:
            return segment(raw)
        except ValueError as exc:
            raise _field_error(line_no, fld, str(exc)) from None
    raise _field_error(line_no, fld, f"expected string or list, got {type(raw).__name__}")


def example_from_record(obj: dict, line_no: int = 0) -> BenchmarkExample:
    """Validate one canonical record and build the example."""
    if not isinstance(obj, dict):
        raise DatasetError(f"line {line_no}: record is not a JSON object")
    for fld in ("id", "dataset", "documents", "summary", "label"):
        if fld not in obj:
            raise _field_error(line_no, fld, "missing")
    if not isinstance(obj["id"], str) or not obj["id"]:
        raise _field_error(line_no, "id", "must be a non-empty string")
    if not isinstance(obj["dataset"], str) or not obj["dataset"]:
        raise _field_error(line_no, "dataset", "must be a non-empty string")

    docs_raw = obj["documents"]
    if not isinstance(docs_raw, list) or not docs_raw:
        raise _field_error(line_no, "documents", "must be a non-empty list")
    doc_sentences: list[str] = []
    for d in docs_raw:
        doc_sentences.extend(s.text for s in _segment_field(d, line_no, "documents"))
    source_count = obj.get("source_count", len(docs_raw))
    if (
        isinstance(source_count, bool)
        or not isinstance(source_count, int)
        or source_count < 1
    ):
        raise _field_error(line_no, "source_count", "must be a positive int")
    if len(docs_raw) > 1 and source_count != len(docs_raw):
        raise _field_error(
            line_no,
            "source_count",
            f"{source_count} contradicts the {len(docs_raw)} listed documents",
        )
    try:
        document = Document.from_texts(doc_sentences, source_count=source_count)
    except ValueError as exc:
        raise _field_error(line_no, "documents", str(exc)) from None

    summary_sents = _segment_field(obj["summary"], line_no, "summary")
    summary = Summary(tuple(SummaryUnit(s) for s in summary_sents))

    label = _parse_label(obj["label"], line_no, "label")

    sentence_labels = None
    if obj.get("sentence_labels") is not None:
        raw_labels = obj["sentence_labels"]
        if not isinstance(raw_labels, list):
            raise _field_error(line_no, "sentence_labels", "must be a list")
        sentence_labels = tuple(
            _parse_label(v, line_no, "sentence_labels") for v in raw_labels
        )

    sentence_errors = None
    if obj.get("sentence_errors") is not None:
        raw_errors = obj["sentence_errors"]
        if not isinstance(raw_errors, list):
            raise _field_error(line_no, "sentence_errors", "must be a list")
        parsed = []
        for entry in raw_errors:
            if entry is None:
                parsed.append(frozenset())
                continue
            if not isinstance(entry, list):
                raise _field_error(
                    line_no, "sentence_errors", f"expected list or null, got {entry!r}"
                )
            try:
                parsed.append(frozenset(ErrorType(e) for e in entry))
            except ValueError as exc:
                raise _field_error(line_no, "sentence_errors", str(exc)) from None
        sentence_errors = tuple(parsed)

    try:
        return BenchmarkExample(
            id=obj["id"],
            dataset=obj["dataset"],
            document=document,
            summary=summary,
            label=label,
            sentence_labels=sentence_labels,
            sentence_errors=sentence_errors,
        )
    except ValueError as exc:
        raise DatasetError(f"line {line_no}: {exc}") from None


def record_from_example(example: BenchmarkExample) -> dict:
    """Canonical dict form: fixed field order, pre-segmented texts."""
    record: dict = {
        "id": example.id,
        "dataset": example.dataset,
        "documents": [[s.text for s in example.document.sentences]],
        "summary": [u.sentence.text for u in example.summary.units],
        "label": example.label.value,
    }
    if example.document.source_count > 1:
        record["source_count"] = example.document.source_count
    if example.sentence_labels is not None:
        record["sentence_labels"] = [lab.value for lab in example.sentence_labels]
    if example.sentence_errors is not None:
        record["sentence_errors"] = [
            sorted(e.value for e in errs) if errs else None
            for errs in example.sentence_errors
        ]
    return record


def serialize_dataset(examples: Iterable[BenchmarkExample]) -> str:
    """Canonical JSONL bytes for a list of examples (sorted by id)."""
    lines = [
        json.dumps(record_from_example(ex), ensure_ascii=False, separators=(", ", ": "))
        for ex in sorted(examples, key=lambda e: e.id)
    ]
    return "".join(line + "\n" for line in lines)


def _load_canonical(path: Path) -> list[BenchmarkExample]:
    examples: list[BenchmarkExample] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except ValueError as exc:
                raise DatasetError(f"line {line_no}: invalid JSON ({exc})") from None
            example = example_from_record(obj, line_no)
            if example.id in seen:
                raise DatasetError(
                    f"line {line_no}: duplicate id {example.id!r} "
                    f"(first seen on line {seen[example.id]})"
                )
            seen[example.id] = line_no
            examples.append(example)
    if not examples:
        raise DatasetError(f"{path}: no records")
    return sorted(examples, key=lambda e: e.id)


def convert_aggrefact_csv(path: Path | str) -> list[BenchmarkExample]:
    """Thin converter for AggreFact-style CSV files.

    Expected columns: ``document``, ``summary``, ``label`` (1 = consistent),
    plus optional ``id`` and ``dataset``. Raw texts are segmented here.
    """
    path = Path(path)
    examples = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {
            "document",
            "summary",
            "label",
        }.issubset(reader.fieldnames):
            raise DatasetError(
                f"{path}: need columns document, summary, label; "
                f"found {reader.fieldnames}"
            )
        for row_no, row in enumerate(reader, start=2):
            label_raw = (row["label"] or "").strip()
            if label_raw not in {"0", "1"}:
                raise DatasetError(f"line {row_no}, field 'label': expected 0 or 1")
            record = {
                "id": row.get("id") or f"row{row_no - 1}",
                "dataset": row.get("dataset") or path.stem,
                "documents": [row["document"]],
                "summary": row["summary"],
                "label": "faithful" if label_raw == "1" else "unfaithful",
            }
            examples.append(example_from_record(record, row_no))
    if not examples:
        raise DatasetError(f"{path}: no records")
    return sorted(examples, key=lambda e: e.id)


def convert_diversumm_jsonl(
    path: Path | str, exclude_mismatched: bool = False
) -> list[BenchmarkExample]:
    """Thin converter for DiverSumm-style JSONL files.

    Same shape as the canonical schema but labels may be raw
    (``{"consistency": n}`` or ``{"votes": [...]}``). When both a summary
    label and sentence labels are present and disagree with the all-
    sentences-faithful rule, the record is warned about and, with
    ``exclude_mismatched``, dropped.
    """
    path = Path(path)
    examples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except ValueError as exc:
                raise DatasetError(f"line {line_no}: invalid JSON ({exc})") from None
            example = example_from_record(obj, line_no)
            if example.sentence_labels is not None:
                derived = summary_label_from_sentences(example.sentence_labels)
                if derived is not example.label:
                    log.warning(
                        "%s line %d (id %s): summary label %s disagrees with "
                        "sentence labels (implying %s)",
                        path,
                        line_no,
                        example.id,
                        example.label.value,
                        derived.value,
                    )
                    if exclude_mismatched:
                        continue
            examples.append(example)
    if not examples:
        raise DatasetError(f"{path}: no records")
    return sorted(examples, key=lambda e: e.id)


def load_dataset(path: Path | str, format: str = "canonical") -> list[BenchmarkExample]:
    """Load and validate a dataset; any schema violation rejects the whole
    load and names the offending line and field."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file does not exist: {path}")
    if format == "canonical":
        return _load_canonical(path)
    if format == "aggrefact":
        return convert_aggrefact_csv(path)
    if format == "diversumm":
        return convert_diversumm_jsonl(path)
    raise DatasetError(f"unknown dataset format {format!r}")
