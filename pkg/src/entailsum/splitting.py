"""Sub-sentence reasoning: sentence splitting plus the scoring variant that
evaluates each simplified part separately and keeps the worst score.

Splitters only need a ``splitter_id`` and a ``split_text`` method returning
the simplified sentences for one input. A failing remote splitter falls
back to identity with a warning; an evaluation run must never abort because
simplification is unavailable.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path

import requests

from .algorithms import (
    RetrievalConfig,
    RetrievalTrace,
    aggregate_subsentences,
    infuse_sentence,
)
from .core import Document, Sentence, SummaryUnit
from .scorers import Scorer

log = logging.getLogger(__name__)

SPLIT_CACHE_FORMAT = "entailsum-split-cache"
SPLIT_CACHE_VERSION = 1

# Splits whose combined length balloons past this multiple of the original
# are treated as runaway generations and replaced by identity.
MAX_SPLIT_GROWTH = 4


@dataclass(frozen=True)
class SplitResult:
    """A sentence and its simplified parts; parts == (original,) when no
    split applies."""

    original: Sentence
    parts: tuple[Sentence, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("split produced no parts")


class IdentitySplitter:
    """No-op splitter: every sentence maps to itself."""

    splitter_id = "identity"

    def split_text(self, text: str) -> list[str]:
        return [text]


class RemoteSplitter:
    """Client for the HTTP splitting service.

    Failures (connection problems, bad status, malformed payloads) degrade
    to identity with a warning; ``fallback_count`` records how often.
    """

    def __init__(
        self,
        base_url: str,
        timeout: float = 60.0,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()
        self._lock = threading.Lock()
        self.fallback_count = 0
        self.splitter_id = f"remote-split:{self._model_id()}"

    def _model_id(self) -> str:
        try:
            resp = self._session.get(f"{self.base_url}/healthz", timeout=self.timeout)
            if resp.status_code == 200:
                return resp.json().get("model_ids", {}).get("split", "unknown")
        except (requests.RequestException, ValueError):
            pass
        return self.base_url

    def _note_fallback(self, reason: str) -> None:
        with self._lock:
            self.fallback_count += 1
        log.warning("splitter fallback to identity: %s", reason)

    def split_text(self, text: str) -> list[str]:
        try:
            resp = self._session.post(
                f"{self.base_url}/v1/split",
                json={"sentences": [text]},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            self._note_fallback(str(exc))
            return [text]
        if resp.status_code != 200:
            self._note_fallback(f"status {resp.status_code}")
            return [text]
        try:
            splits = resp.json()["splits"]
            parts = [str(p) for p in splits[0]]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            self._note_fallback(f"malformed response: {exc}")
            return [text]
        return parts or [text]


class SplitCache:
    """Caching wrapper keyed by (splitter_id, text digest); optionally
    persists splits to an append-only record file like the score cache."""

    def __init__(self, inner, path: Path | str | None = None):
        self.inner = inner
        self.splitter_id = inner.splitter_id
        self._lock = threading.Lock()
        self._entries: dict[str, list[str]] = {}
        self._path = Path(path) if path is not None else None
        self._io_ok = path is not None
        if self._io_ok:
            self._load()

    def _key(self, text: str) -> str:
        return hashlib.sha256(
            f"{self.splitter_id}\x1f{text}".encode("utf-8")
        ).hexdigest()

    def _load(self) -> None:
        try:
            with open(self._path, encoding="utf-8") as fh:
                header = fh.readline()
                if header:
                    meta = json.loads(header)
                    if (
                        meta.get("format") != SPLIT_CACHE_FORMAT
                        or meta.get("version") != SPLIT_CACHE_VERSION
                    ):
                        log.warning("ignoring split cache with header %r", meta)
                        return
                for line in fh:
                    if not line.strip():
                        continue
                    try:
                        rec = json.loads(line)
                        self._entries[rec["k"]] = list(rec["v"])
                    except (ValueError, KeyError, TypeError):
                        break
        except FileNotFoundError:
            pass
        except OSError as exc:
            log.warning("split cache unreadable (%s)", exc)
            self._io_ok = False

    def _append(self, key: str, parts: list[str]) -> None:
        if not self._io_ok:
            return
        try:
            new = not self._path.exists()
            with open(self._path, "a", encoding="utf-8") as fh:
                if new:
                    fh.write(
                        json.dumps(
                            {
                                "format": SPLIT_CACHE_FORMAT,
                                "version": SPLIT_CACHE_VERSION,
                            }
                        )
                        + "\n"
                    )
                fh.write(json.dumps({"k": key, "v": parts}) + "\n")
        except OSError as exc:
            log.warning("split cache write failed (%s)", exc)
            self._io_ok = False

    def split_text(self, text: str) -> list[str]:
        key = self._key(text)
        with self._lock:
            if key in self._entries:
                return list(self._entries[key])
        parts = self.inner.split_text(text)
        with self._lock:
            self._entries[key] = list(parts)
        self._append(key, list(parts))
        return parts


def split_sentence(sentence: Sentence, splitter) -> SplitResult:
    """Split one sentence into simplified parts.

    A single-part result, a blank result, or a runaway result (combined
    length above ``MAX_SPLIT_GROWTH`` times the original) all collapse to
    identity, so downstream scoring is never worse off than unsplit.
    """
    texts = [t for t in splitter.split_text(sentence.text) if t and t.strip()]
    if len(texts) <= 1:
        return SplitResult(sentence, (sentence,))
    parts = tuple(Sentence(i, t) for i, t in enumerate(texts))
    if sum(p.token_count for p in parts) > MAX_SPLIT_GROWTH * sentence.token_count:
        log.warning(
            "discarding runaway split of %r (%d parts)", sentence.text, len(parts)
        )
        return SplitResult(sentence, (sentence,))
    return SplitResult(sentence, parts)


def infuse_sub(
    doc: Document,
    unit: SummaryUnit,
    scorer: Scorer,
    splitter,
    config: RetrievalConfig = RetrievalConfig(),
    aggregate: Callable[[Sequence[float]], float] = aggregate_subsentences,
) -> tuple[float, tuple[RetrievalTrace, ...]]:
    """Incremental retrieval over each simplified part of a summary
    sentence, aggregated with min by default."""
    result = split_sentence(unit.sentence, splitter)
    scores: list[float] = []
    traces: list[RetrievalTrace] = []
    for part in result.parts:
        score, trace = infuse_sentence(doc, part, scorer, config)
        scores.append(score)
        traces.append(trace)
    return aggregate(scores), tuple(traces)
