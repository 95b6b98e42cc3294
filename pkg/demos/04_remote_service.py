"""Scoring through the HTTP model service.

Requires the sidecar from server/ to be running, e.g.:

    cd server && MODEL_BACKEND=stub uvicorn nli_server.app:app --port 8400

Then:

    ENTAILSUM_SERVICE_URL=http://127.0.0.1:8400 python demos/04_remote_service.py

The remote scorer health-checks the service at startup, batches pair
requests, retries transient failures, and can sit behind the same
persistent cache as any offline scorer.
"""

import os
import sys
import tempfile

from entailsum import RemoteScorer, ScoreRequest, ScorerUnavailableError, cached
from entailsum.splitting import RemoteSplitter, split_sentence
from entailsum.core import Sentence

url = os.environ.get("ENTAILSUM_SERVICE_URL", "http://127.0.0.1:8400")

try:
    scorer = RemoteScorer(url)
except ScorerUnavailableError as exc:
    sys.exit(f"service not reachable ({exc}); start the sidecar first")

print(f"connected; scorer id: {scorer.scorer_id}")

pairs = [
    ScoreRequest(
        "At 8:34, the Boston Center controller received a third transmission "
        "from American 11",
        "The Boston Center controller got a third transmission from American 11.",
    ),
    ScoreRequest("The cat sat on the mat.", "The cat never sat anywhere."),
]
with tempfile.TemporaryDirectory() as tmp:
    caching = cached(scorer, f"{tmp}/nli_cache.jsonl")
    for verdict, req in zip(caching.score_batch(pairs), pairs):
        print(f"\npremise:    {req.premise}")
        print(f"hypothesis: {req.hypothesis}")
        print(
            f"entailment={verdict.entailment:.3f} neutral={verdict.neutral:.3f} "
            f"contradiction={verdict.contradiction:.3f}"
        )
    # a repeat batch is served from the cache without touching the service
    caching.score_batch(pairs)
    print(f"\ncache stats: {caching.stats.as_dict()}")

splitter = RemoteSplitter(url)
sentence = Sentence(
    0,
    "Heritage auctions offered the gray jacket featuring a black zigzag applique",
)
result = split_sentence(sentence, splitter)
print("\nsplit parts:")
for part in result.parts:
    print(f"  - {part.text}")
