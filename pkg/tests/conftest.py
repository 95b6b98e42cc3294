import hashlib
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from entailsum.core import Document, NliVerdict, Sentence
from entailsum.scorers import TableScorer


def hashed_verdict(seed: int, premise: str, hypothesis: str) -> NliVerdict:
    """Deterministic pseudo-random verdict: a lazily materialized random
    table keyed by the pair."""
    digest = hashlib.sha256(
        f"{seed}\x1f{premise}\x1f{hypothesis}".encode("utf-8")
    ).digest()
    a = int.from_bytes(digest[0:8], "big") + 1
    b = int.from_bytes(digest[8:16], "big") + 1
    c = int.from_bytes(digest[16:24], "big") + 1
    total = a + b + c
    return NliVerdict(a / total, b / total, c / total)


def random_table_scorer(seed: int) -> TableScorer:
    return TableScorer(
        default=lambda p, h: hashed_verdict(seed, p, h),
        scorer_id=f"fuzz-{seed}",
    )


def make_doc(m: int, tokens_per_sentence: int = 1) -> Document:
    texts = [
        " ".join(f"s{m_i}w{t}" for t in range(max(1, tokens_per_sentence)))
        for m_i in range(m)
    ]
    return Document.from_texts(texts)


@pytest.fixture
def hypothesis_sentence() -> Sentence:
    return Sentence(0, "the claim under test")
