"""Model backends: deterministic stubs for tests and CI, plus
transformers-backed implementations for real checkpoints.

Both NLI backends implement ``score_pairs(pairs) -> (triples, truncated)``
where triples are (entailment, neutral, contradiction) summing to 1, and
``truncated[i]`` marks pairs whose premise had to be cut to fit the
encoder. Truncation always removes tokens from the end of the premise;
the hypothesis is the unit under evaluation and is never cut.

Split backends implement ``split(sentences) -> list[list[str]]``, one
list of parts per input sentence, order preserved.
"""

from __future__ import annotations

import hashlib
import re
import threading

DEFAULT_MAX_TOKENS = 512
SPLIT_MIN_TOKENS = 3
SPLIT_MAX_TOKENS = 128


def _softmax_triple_from_digest(premise: str, hypothesis: str) -> tuple[float, float, float]:
    digest = hashlib.sha256(f"{premise}\x1f{hypothesis}".encode("utf-8")).digest()
    a = int.from_bytes(digest[0:8], "big") + 1
    b = int.from_bytes(digest[8:16], "big") + 1
    c = int.from_bytes(digest[16:24], "big") + 1
    total = a + b + c
    return a / total, b / total, c / total


class StubNli:
    """Deterministic stand-in for the cross-encoder: verdicts are a pure
    function of the (possibly truncated) pair text."""

    def __init__(self, max_tokens: int = DEFAULT_MAX_TOKENS):
        self.model_id = "stub-nli"
        self.max_tokens = max_tokens

    def score_pairs(self, pairs):
        triples = []
        truncated = []
        for premise, hypothesis in pairs:
            p_tokens = premise.split()
            h_tokens = hypothesis.split()
            budget = self.max_tokens - len(h_tokens)
            if len(p_tokens) > budget:
                p_tokens = p_tokens[: max(1, budget)]
                premise = " ".join(p_tokens)
                truncated.append(True)
            else:
                truncated.append(False)
            triples.append(_softmax_triple_from_digest(premise, hypothesis))
        return triples, truncated


class StubSplitter:
    """Deterministic stand-in for the splitting model: breaks a sentence at
    coordinating ' and ' when both halves are big enough, else identity."""

    def __init__(self):
        self.model_id = "stub-split"

    def split(self, sentences):
        out = []
        for sentence in sentences:
            parts = [p.strip() for p in re.split(r"\s+and\s+", sentence)]
            if len(parts) > 1 and all(len(p.split()) >= 2 for p in parts):
                out.append([p.rstrip(".") + "." for p in parts])
            else:
                out.append([sentence])
        return out


def clamp_splits(sentences, splits):
    """Serving-side output guard: blank parts, or generations outside
    [SPLIT_MIN_TOKENS, SPLIT_MAX_TOKENS] total tokens, fall back to the
    original sentence."""
    guarded = []
    for sentence, parts in zip(sentences, splits):
        parts = [p.strip() for p in parts if p and p.strip()]
        total = sum(len(p.split()) for p in parts)
        if not parts or not SPLIT_MIN_TOKENS <= total <= SPLIT_MAX_TOKENS:
            guarded.append([sentence])
        else:
            guarded.append(parts)
    return guarded


class TransformersNli:
    """Cross-encoder sequence classifier loaded from a checkpoint.

    The label order is read from the checkpoint config (id2label), matched
    by name against entailment/neutral/contradiction synonyms.
    """

    def __init__(self, checkpoint: str, max_tokens: int | None = None, device="cpu"):
        import torch
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(checkpoint)
        self.model = AutoModelForSequenceClassification.from_pretrained(checkpoint)
        self.model.eval()
        self.model.to(device)
        self.device = device
        self.model_id = checkpoint
        limit = getattr(self.tokenizer, "model_max_length", DEFAULT_MAX_TOKENS)
        if limit is None or limit > 100_000:  # some tokenizers report a sentinel
            limit = DEFAULT_MAX_TOKENS
        self.max_tokens = min(max_tokens or limit, limit)
        self._label_index = self._map_labels(self.model.config.id2label)
        self._lock = threading.Lock()  # inference serialized

    @staticmethod
    def _map_labels(id2label) -> dict[str, int]:
        mapping = {}
        for idx, name in id2label.items():
            lowered = str(name).lower()
            if "entail" in lowered or "support" in lowered:
                mapping["entailment"] = int(idx)
            elif "contra" in lowered or "refut" in lowered:
                mapping["contradiction"] = int(idx)
            elif "neutral" in lowered or "not" in lowered or "nei" in lowered:
                mapping["neutral"] = int(idx)
        if set(mapping) != {"entailment", "neutral", "contradiction"}:
            raise ValueError(f"cannot map labels from {id2label!r}")
        return mapping

    def _truncate(self, premise: str, hypothesis: str) -> tuple[str, bool]:
        # Keep the hypothesis whole; cut premise tokens from the end.
        special = self.tokenizer.num_special_tokens_to_add(pair=True)
        h_len = len(self.tokenizer.tokenize(hypothesis))
        budget = self.max_tokens - h_len - special
        p_ids = self.tokenizer.tokenize(premise)
        if len(p_ids) <= budget:
            return premise, False
        kept = self.tokenizer.convert_tokens_to_string(p_ids[: max(1, budget)])
        return kept, True

    def score_pairs(self, pairs):
        torch = self._torch
        prepared = [self._truncate(p, h) for p, h in pairs]
        texts = [(p, pairs[i][1]) for i, (p, _) in enumerate(prepared)]
        truncated = [flag for _, flag in prepared]
        with self._lock, torch.no_grad():
            enc = self.tokenizer(
                [p for p, _ in texts],
                [h for _, h in texts],
                padding=True,
                truncation=True,
                max_length=self.max_tokens,
                return_tensors="pt",
            ).to(self.device)
            probs = torch.softmax(self.model(**enc).logits, dim=-1).cpu()
        idx = self._label_index
        triples = [
            (
                float(row[idx["entailment"]]),
                float(row[idx["neutral"]]),
                float(row[idx["contradiction"]]),
            )
            for row in probs
        ]
        return triples, truncated


class TransformersSplitter:
    """Text-to-text splitting model; greedy decoding keeps outputs
    deterministic so the client side can cache them."""

    def __init__(self, checkpoint: str, device="cpu"):
        import torch
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(checkpoint)
        self.model = AutoModelForSeq2SeqLM.from_pretrained(checkpoint)
        self.model.eval()
        self.model.to(device)
        self.device = device
        self.model_id = checkpoint
        self._lock = threading.Lock()

    def split(self, sentences):
        torch = self._torch
        with self._lock, torch.no_grad():
            enc = self.tokenizer(
                list(sentences), padding=True, truncation=True, return_tensors="pt"
            ).to(self.device)
            out = self.model.generate(
                **enc,
                do_sample=False,
                num_beams=1,
                min_new_tokens=SPLIT_MIN_TOKENS,
                max_new_tokens=SPLIT_MAX_TOKENS,
            )
        decoded = self.tokenizer.batch_decode(out, skip_special_tokens=True)
        return [self._to_parts(text) for text in decoded]

    @staticmethod
    def _to_parts(text: str) -> list[str]:
        parts = [p.strip() for p in re.split(r"(?<=[.!?])\s+", text) if p.strip()]
        return parts or [text]
