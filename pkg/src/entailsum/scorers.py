"""NLI scorers: the scoring contract, offline implementations, a remote
HTTP client, and a persistent score cache with call accounting.

Every scorer is deterministic for a fixed ``scorer_id`` and input pair, and
safe to call from multiple threads; results never depend on interleaving.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
import time
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import requests

from .core import NliVerdict

log = logging.getLogger(__name__)

CACHE_FORMAT = "entailsum-nli-cache"
CACHE_FORMAT_VERSION = 1


class ScorerError(Exception):
    """Base class for scoring failures."""


class ScorerUnavailableError(ScorerError):
    """The scoring service cannot be reached (retryable)."""


class MalformedResponseError(ScorerError):
    """The scoring service answered with something unusable (not retryable)."""


@dataclass(frozen=True)
class ScoreRequest:
    """One premise/hypothesis pair to score."""

    premise: str
    hypothesis: str

    def __post_init__(self) -> None:
        if not self.premise.strip():
            raise ValueError("premise is empty")
        if not self.hypothesis.strip():
            raise ValueError("hypothesis is empty")


@dataclass(frozen=True)
class ScorerStats:
    """Call accounting snapshot.

    ``total_calls`` counts individual pair evaluations requested (a batch of
    n counts n); ``cache_hits`` counts requests served without reaching the
    wrapped scorer; ``batch_count`` counts score_batch invocations.
    """

    total_calls: int = 0
    cache_hits: int = 0
    batch_count: int = 0

    def __post_init__(self) -> None:
        if self.cache_hits > self.total_calls:
            raise ValueError("cache_hits cannot exceed total_calls")

    def as_dict(self) -> dict[str, int]:
        return {
            "total_calls": self.total_calls,
            "cache_hits": self.cache_hits,
            "batch_count": self.batch_count,
        }


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CacheKey:
    """Cache key: scorer identity plus content digests of both sides.

    Direction-sensitive by construction: (p, h) and (h, p) hash differently.
    """

    scorer_id: str
    premise_digest: str
    hypothesis_digest: str

    @classmethod
    def for_request(cls, scorer_id: str, req: ScoreRequest) -> "CacheKey":
        return cls(scorer_id, _digest(req.premise), _digest(req.hypothesis))


class Scorer:
    """Base scorer: implements batching, validation, and call accounting on
    top of a single abstract ``_score_one``."""

    scorer_id: str = "abstract"

    def __init__(self) -> None:
        self._stats_lock = threading.Lock()
        self._total_calls = 0
        self._cache_hits = 0
        self._batch_count = 0

    @property
    def stats(self) -> ScorerStats:
        with self._stats_lock:
            return ScorerStats(self._total_calls, self._cache_hits, self._batch_count)

    def _count(self, calls: int = 0, hits: int = 0, batches: int = 0) -> None:
        with self._stats_lock:
            self._total_calls += calls
            self._cache_hits += hits
            self._batch_count += batches

    def score(self, req: ScoreRequest) -> NliVerdict:
        self._count(calls=1)
        return self._score_one(req)

    def score_batch(self, reqs: Sequence[ScoreRequest]) -> list[NliVerdict]:
        """Score a batch; output order matches input order exactly.

        Any element failing aborts the whole batch: partial results are
        never returned.
        """
        reqs = list(reqs)
        if not reqs:
            raise ValueError("empty batch")
        self._count(calls=len(reqs), batches=1)
        return self._score_many(reqs)

    def _score_many(self, reqs: list[ScoreRequest]) -> list[NliVerdict]:
        return [self._score_one(r) for r in reqs]

    def _score_one(self, req: ScoreRequest) -> NliVerdict:
        raise NotImplementedError


class TableScorer(Scorer):
    """Scorer backed by an explicit (premise, hypothesis) -> verdict table.

    ``default`` optionally supplies verdicts for pairs missing from the
    table; it must be a deterministic function of the pair.
    """

    def __init__(self, table=None, default=None, scorer_id: str = "table"):
        super().__init__()
        self.scorer_id = scorer_id
        self._table: dict[tuple[str, str], NliVerdict] = dict(table or {})
        self._default = default

    def _score_one(self, req: ScoreRequest) -> NliVerdict:
        key = (req.premise, req.hypothesis)
        if key in self._table:
            return self._table[key]
        if self._default is not None:
            return self._default(req.premise, req.hypothesis)
        raise ScorerError(
            f"no table entry for pair (premise={req.premise!r}, "
            f"hypothesis={req.hypothesis!r})"
        )


_TOKEN_RE = re.compile(r"[a-z0-9]+")
_NEGATION_TOKENS = frozenset({"not", "no", "never"})


def lexical_tokens(text: str) -> list[str]:
    """Lowercased alphanumeric runs."""
    return _TOKEN_RE.findall(text.lower())


def _has_negation_cue(text: str) -> bool:
    low = text.lower()
    if "n't" in low:
        return True
    return not _NEGATION_TOKENS.isdisjoint(lexical_tokens(low))


class LexicalScorer(Scorer):
    """Deterministic offline scorer from token overlap and negation cues.

    With r the fraction of distinct hypothesis tokens found in the premise
    and neg = 1 iff exactly one side carries a negation cue:

        entailment    = 0.9 * r
        contradiction = 0.9 * (1 - r) * neg
        neutral       = 1 - entailment - contradiction   (always >= 0.1)
    """

    scorer_id = "lexical"

    def _score_one(self, req: ScoreRequest) -> NliVerdict:
        hyp = set(lexical_tokens(req.hypothesis))
        prem = set(lexical_tokens(req.premise))
        r = len(hyp & prem) / len(hyp) if hyp else 0.0
        neg = _has_negation_cue(req.premise) != _has_negation_cue(req.hypothesis)
        entailment = 0.9 * r
        contradiction = 0.9 * (1.0 - r) if neg else 0.0
        return NliVerdict(entailment, 1.0 - entailment - contradiction, contradiction)


class RemoteScorer(Scorer):
    """Client for the HTTP scoring service.

    Sends full text; any truncation is the server's responsibility.
    Connection problems and 5xx responses are retried with backoff and end
    in ``ScorerUnavailableError``; unusable payloads raise
    ``MalformedResponseError`` immediately.
    """

    def __init__(
        self,
        base_url: str,
        timeout: float = 60.0,
        retries: int = 2,
        backoff: float = 0.5,
        session: requests.Session | None = None,
        health_check: bool = True,
    ):
        super().__init__()
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._session = session or requests.Session()
        if health_check:
            info = self.check_health()
            model_id = info.get("model_ids", {}).get("nli", "unknown")
            self.scorer_id = f"remote:{model_id}"
        else:
            self.scorer_id = f"remote:{self.base_url}"

    def check_health(self) -> dict:
        try:
            resp = self._session.get(f"{self.base_url}/healthz", timeout=self.timeout)
        except requests.RequestException as exc:
            raise ScorerUnavailableError(
                f"scoring service unreachable at {self.base_url}: {exc}"
            ) from exc
        if resp.status_code != 200:
            raise ScorerUnavailableError(
                f"scoring service not ready: /healthz returned {resp.status_code}"
            )
        try:
            return resp.json()
        except ValueError as exc:
            raise MalformedResponseError("healthz payload is not JSON") from exc

    def _score_one(self, req: ScoreRequest) -> NliVerdict:
        return self._post([req])[0]

    def _score_many(self, reqs: list[ScoreRequest]) -> list[NliVerdict]:
        return self._post(reqs)

    def _post(self, reqs: list[ScoreRequest]) -> list[NliVerdict]:
        payload = {
            "pairs": [{"premise": r.premise, "hypothesis": r.hypothesis} for r in reqs]
        }
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = self._session.post(
                    f"{self.base_url}/v1/nli", json=payload, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_exc = exc
                continue
            if resp.status_code >= 500:
                last_exc = ScorerUnavailableError(
                    f"service returned {resp.status_code}"
                )
                continue
            if resp.status_code != 200:
                raise ScorerError(
                    f"service rejected the request: {resp.status_code} {resp.text!r}"
                )
            return self._parse(resp, len(reqs))
        raise ScorerUnavailableError(
            f"scoring service unavailable after {self.retries + 1} attempts: "
            f"{last_exc}"
        )

    @staticmethod
    def _parse(resp: requests.Response, expected: int) -> list[NliVerdict]:
        try:
            body = resp.json()
            verdicts = body["verdicts"]
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedResponseError(f"unusable response body: {exc}") from exc
        if len(verdicts) != expected:
            raise MalformedResponseError(
                f"got {len(verdicts)} verdicts for {expected} pairs"
            )
        out = []
        for v in verdicts:
            try:
                out.append(
                    NliVerdict(v["entailment"], v["neutral"], v["contradiction"])
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedResponseError(f"invalid verdict {v!r}: {exc}") from exc
        return out


class ScoreCache(Scorer):
    """Caching wrapper around a deterministic scorer.

    Semantically identical to the wrapped scorer; repeated keys never reach
    it. Keys combine the inner scorer id with content digests of both texts,
    so (p, h) and (h, p) cache separately and swapping scorers invalidates
    automatically. With ``path`` set, entries persist to an append-only
    record file between runs; cache I/O failures degrade to pass-through
    with a warning and never affect results.

    Concurrent requests for the same missing key coalesce: one computes, the
    rest wait and count as hits, so stats do not depend on scheduling.
    """

    def __init__(self, inner: Scorer, path=None):
        super().__init__()
        self.inner = inner
        self.scorer_id = inner.scorer_id
        self._lock = threading.Lock()
        self._entries: dict[CacheKey, NliVerdict] = {}
        self._pending: dict[CacheKey, threading.Event] = {}
        self._path = Path(path) if path is not None else None
        self._io_ok = path is not None
        if self._io_ok:
            self._load()

    # -- persistence ------------------------------------------------------

    def _load(self) -> None:
        try:
            with open(self._path, encoding="utf-8") as fh:
                header = fh.readline()
                if header:
                    meta = json.loads(header)
                    if (
                        meta.get("format") != CACHE_FORMAT
                        or meta.get("version") != CACHE_FORMAT_VERSION
                    ):
                        log.warning(
                            "ignoring cache file %s with unknown header %r",
                            self._path,
                            meta,
                        )
                        return
                for line_no, line in enumerate(fh, start=2):
                    if not line.strip():
                        continue
                    try:
                        rec = json.loads(line)
                        key = CacheKey(*rec["k"])
                        verdict = NliVerdict(*rec["v"])
                    except (ValueError, KeyError, TypeError) as exc:
                        # Torn trailing write: keep what loaded cleanly.
                        log.warning(
                            "stopping cache load at %s:%d (%s)",
                            self._path,
                            line_no,
                            exc,
                        )
                        break
                    self._entries[key] = verdict
        except FileNotFoundError:
            pass
        except OSError as exc:
            log.warning("cache unreadable (%s); continuing without disk", exc)
            self._io_ok = False

    def _append(self, key: CacheKey, verdict: NliVerdict) -> None:
        if not self._io_ok:
            return
        record = json.dumps(
            {
                "k": [key.scorer_id, key.premise_digest, key.hypothesis_digest],
                "v": [verdict.entailment, verdict.neutral, verdict.contradiction],
            }
        )
        try:
            new = not self._path.exists()
            with open(self._path, "a", encoding="utf-8") as fh:
                if new:
                    header = json.dumps(
                        {"format": CACHE_FORMAT, "version": CACHE_FORMAT_VERSION}
                    )
                    fh.write(header + "\n")
                fh.write(record + "\n")
        except OSError as exc:
            log.warning("cache write failed (%s); continuing without disk", exc)
            self._io_ok = False

    def clear(self) -> None:
        """Whole-file reset: drop every entry in memory and on disk."""
        with self._lock:
            self._entries.clear()
        if self._path is not None:
            try:
                header = json.dumps(
                    {"format": CACHE_FORMAT, "version": CACHE_FORMAT_VERSION}
                )
                self._path.write_text(header + "\n", encoding="utf-8")
                self._io_ok = True
            except OSError as exc:
                log.warning("cache reset failed (%s)", exc)
                self._io_ok = False

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    # -- scoring ----------------------------------------------------------

    def _score_one(self, req: ScoreRequest) -> NliVerdict:
        key = CacheKey.for_request(self.inner.scorer_id, req)
        while True:
            with self._lock:
                if key in self._entries:
                    self._count(hits=1)
                    return self._entries[key]
                event = self._pending.get(key)
                if event is None:
                    self._pending[key] = threading.Event()
                    break
            # Another thread is computing this key; wait, then re-check.
            event.wait()
        try:
            verdict = self.inner.score(req)
        except BaseException:
            with self._lock:
                self._pending.pop(key).set()
            raise
        with self._lock:
            self._entries[key] = verdict
            self._pending.pop(key).set()
        self._append(key, verdict)
        return verdict

    def _score_many(self, reqs: list[ScoreRequest]) -> list[NliVerdict]:
        """Batch path: misses are forwarded to the inner scorer as one batch
        so its own batching (e.g. one HTTP request) is preserved."""
        keys = [CacheKey.for_request(self.inner.scorer_id, r) for r in reqs]
        results: dict[int, NliVerdict] = {}
        compute: list[int] = []   # positions this call will compute
        claimed: set[CacheKey] = set()
        wait_positions: list[int] = []
        with self._lock:
            for i, key in enumerate(keys):
                if key in self._entries:
                    self._count(hits=1)
                    results[i] = self._entries[key]
                elif key in claimed or key in self._pending:
                    wait_positions.append(i)
                else:
                    self._pending[key] = threading.Event()
                    claimed.add(key)
                    compute.append(i)
        if compute:
            try:
                verdicts = self.inner.score_batch([reqs[i] for i in compute])
            except BaseException:
                with self._lock:
                    for i in compute:
                        self._pending.pop(keys[i]).set()
                raise
            with self._lock:
                for i, verdict in zip(compute, verdicts):
                    results[i] = verdict
                    self._entries[keys[i]] = verdict
                    self._pending.pop(keys[i]).set()
            for i, verdict in zip(compute, verdicts):
                self._append(keys[i], verdict)
        for i in wait_positions:
            # In-batch duplicates resolve instantly; cross-thread pendings
            # block until their computer stores the entry (or fails, in
            # which case _score_one retries or recomputes).
            results[i] = self._score_one(reqs[i])
        return [results[i] for i in range(len(reqs))]


def cached(inner: Scorer, path=None) -> ScoreCache:
    """Wrap a deterministic scorer in a (optionally persistent) cache."""
    return ScoreCache(inner, path)


class CountingScorer(Scorer):
    """Pass-through wrapper that keeps its own call accounting.

    Used to attribute calls to one consumer while several share a scorer
    (typically a common cache) underneath.
    """

    def __init__(self, inner: Scorer):
        super().__init__()
        self.inner = inner
        self.scorer_id = inner.scorer_id

    def _score_one(self, req: ScoreRequest) -> NliVerdict:
        return self.inner.score(req)

    def _score_many(self, reqs: list[ScoreRequest]) -> list[NliVerdict]:
        return self.inner.score_batch(reqs)
