"""Meta-evaluation: ROC-AUC, bootstrap significance testing, and score
distributions per error type.

ROC-AUC follows the Mann-Whitney reading: the probability that a faithful
example outscores an unfaithful one, ties counted half, faithful as the
positive class. Significance uses shared 70% resamples and a paired
two-sided t-test on the per-round AUC differences; every random draw flows
from one recorded seed with per-round substreams, so rounds can run in any
order (or in parallel) without changing the result.
"""

from __future__ import annotations

import csv
import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats as sstats

from .core import ErrorType, FaithfulLabel

REPORT_SCHEMA_VERSION = 1

_MAX_REDRAWS = 1000


class UndefinedAucError(ValueError):
    """Raised when one of the two classes is absent."""


@dataclass(frozen=True)
class ScoredExample:
    """One (example, system) score with its gold label."""

    example_id: str
    system_id: str
    score: float
    label: FaithfulLabel

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score!r} outside [0, 1]")


def _positives_mask(labels: Sequence[FaithfulLabel]) -> np.ndarray:
    for lab in labels:
        if not isinstance(lab, FaithfulLabel):
            raise ValueError(f"expected FaithfulLabel, got {lab!r}")
    return np.array([lab is FaithfulLabel.FAITHFUL for lab in labels], dtype=bool)


def roc_auc(scores: Sequence[float], labels: Sequence[FaithfulLabel]) -> float:
    """Area under the ROC curve via midranks.

    Equals P(score_faithful > score_unfaithful) + 0.5 * P(tie). Raises
    ``UndefinedAucError`` when either class is missing.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1 or len(scores) != len(labels):
        raise ValueError("scores and labels must be aligned 1-d sequences")
    pos = _positives_mask(labels)
    n_pos = int(pos.sum())
    n_neg = len(scores) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAucError(
            f"AUC undefined with {n_pos} faithful and {n_neg} unfaithful examples"
        )
    ranks = sstats.rankdata(scores)
    rank_sum = ranks[pos].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


@dataclass(frozen=True)
class BootstrapResult:
    """Outcome of one paired bootstrap comparison.

    ``exactly_equal`` marks an all-zero difference vector (the two systems
    agreed on every resample); ``degenerate`` marks zero variance more
    generally. Neither produces a NaN p-value: identical systems get
    p = 1.0, a constant nonzero difference gets p = 0.0.
    """

    p_value: float
    t_statistic: float
    exactly_equal: bool
    degenerate: bool
    auc_a: tuple[float, ...]
    auc_b: tuple[float, ...]
    rounds: int
    fraction: float
    seed: int
    with_replacement: bool


def _resample_indices(
    rng: np.random.Generator,
    pos: np.ndarray,
    size: int,
    with_replacement: bool,
) -> np.ndarray:
    n = len(pos)
    for _ in range(_MAX_REDRAWS):
        idx = rng.choice(n, size=size, replace=with_replacement)
        chosen = pos[idx]
        if chosen.any() and not chosen.all():
            return idx
    raise UndefinedAucError(
        f"could not draw a two-class resample of size {size} in "
        f"{_MAX_REDRAWS} attempts"
    )


def bootstrap_compare(
    scores_a: Sequence[float],
    scores_b: Sequence[float],
    labels: Sequence[FaithfulLabel],
    fraction: float = 0.7,
    rounds: int = 100,
    seed: int = 42,
    with_replacement: bool = False,
) -> BootstrapResult:
    """Paired bootstrap comparison of two systems on shared resamples.

    Each round draws the same index subset for both systems (default: 70%
    of the examples without replacement, redrawn if single-class), computes
    both AUCs, and a paired two-sided t-test runs on the differences.
    Deterministic for a fixed seed regardless of round scheduling.
    """
    a = np.asarray(scores_a, dtype=float)
    b = np.asarray(scores_b, dtype=float)
    if not (len(a) == len(b) == len(labels)):
        raise ValueError("score vectors and labels must be aligned")
    if rounds < 2:
        raise ValueError("need at least 2 rounds")
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    pos = _positives_mask(labels)
    if not pos.any() or pos.all():
        raise UndefinedAucError("both classes must be present in the full set")
    labels = list(labels)
    size = max(2, int(round(fraction * len(labels))))

    auc_a: list[float] = []
    auc_b: list[float] = []
    for r in range(rounds):
        rng = np.random.default_rng([seed, r])
        idx = _resample_indices(rng, pos, size, with_replacement)
        sub_labels = [labels[i] for i in idx]
        auc_a.append(roc_auc(a[idx], sub_labels))
        auc_b.append(roc_auc(b[idx], sub_labels))

    diffs = np.asarray(auc_a) - np.asarray(auc_b)
    if np.ptp(diffs) == 0.0:
        equal = bool(diffs[0] == 0.0)
        t_stat = 0.0 if equal else float(np.sign(diffs[0]) * np.inf)
        p_value = 1.0 if equal else 0.0
        return BootstrapResult(
            p_value, t_stat, equal, True, tuple(auc_a), tuple(auc_b),
            rounds, fraction, seed, with_replacement,
        )
    res = sstats.ttest_rel(auc_a, auc_b)
    return BootstrapResult(
        float(res.pvalue), float(res.statistic), False, False,
        tuple(auc_a), tuple(auc_b), rounds, fraction, seed, with_replacement,
    )


FAITHFUL_PANEL = "faithful"


def error_type_histogram(
    sentence_records: Iterable[tuple[float, object]],
    bins: int = 10,
) -> dict[str, np.ndarray]:
    """Binned entailment-score counts per panel.

    Each record is (score, tag) where tag is either
    ``FaithfulLabel.FAITHFUL`` or a collection of ``ErrorType``. A sentence
    carrying several error types counts once per type. Bins are equal-width
    over [0, 1]; a score of exactly 1.0 lands in the last bin.
    """
    if bins < 2:
        raise ValueError("need at least 2 bins")
    panels: dict[str, np.ndarray] = {FAITHFUL_PANEL: np.zeros(bins, dtype=int)}
    for err in ErrorType:
        panels[err.value] = np.zeros(bins, dtype=int)
    edges = np.linspace(0.0, 1.0, bins + 1)
    for score, tag in sentence_records:
        if not 0.0 <= score <= 1.0:
            raise ValueError(f"score {score!r} outside [0, 1]")
        b = min(int(np.searchsorted(edges, score, side="right")) - 1, bins - 1)
        if tag is FaithfulLabel.FAITHFUL:
            panels[FAITHFUL_PANEL][b] += 1
            continue
        if isinstance(tag, ErrorType):
            tag = (tag,)
        for err in tag:
            if not isinstance(err, ErrorType):
                raise ValueError(f"expected ErrorType, got {err!r}")
            panels[err.value][b] += 1
    return panels


def export_histograms_csv(panels: dict[str, np.ndarray], path: Path | str) -> None:
    """Write per-panel bin counts as CSV (panel, bin_low, bin_high, count)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["panel", "bin_low", "bin_high", "count"])
        for panel in sorted(panels):
            counts = panels[panel]
            edges = np.linspace(0.0, 1.0, len(counts) + 1)
            for i, count in enumerate(counts):
                writer.writerow(
                    [panel, f"{edges[i]:.6f}", f"{edges[i + 1]:.6f}", int(count)]
                )


@dataclass
class EvalReport:
    """Meta-evaluation results for a set of systems on one benchmark.

    Serializes to a versioned JSON schema with sorted keys; identical
    inputs and seed produce identical bytes.
    """

    seed: int
    datasets: list[str]
    auc: dict[str, float]
    bootstrap_rounds: int
    bootstrap_fraction: float
    with_replacement: bool
    bootstrap_samples: dict[str, list[float]]
    pairwise: dict[str, dict]
    k_stats: dict[str, dict]
    scorer_stats: dict[str, dict]
    example_count: int
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_json(self) -> str:
        payload = {
            "schema_version": self.schema_version,
            "seed": self.seed,
            "datasets": self.datasets,
            "example_count": self.example_count,
            "auc": self.auc,
            "bootstrap": {
                "rounds": self.bootstrap_rounds,
                "fraction": self.bootstrap_fraction,
                "with_replacement": self.with_replacement,
                "samples": self.bootstrap_samples,
                "pairwise": self.pairwise,
            },
            "k_stats": self.k_stats,
            "scorer_stats": self.scorer_stats,
        }
        return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        payload = json.loads(text)
        if payload.get("schema_version") != REPORT_SCHEMA_VERSION:
            raise ValueError(
                f"unsupported report schema {payload.get('schema_version')!r}"
            )
        boot = payload["bootstrap"]
        return cls(
            seed=payload["seed"],
            datasets=payload["datasets"],
            auc=payload["auc"],
            bootstrap_rounds=boot["rounds"],
            bootstrap_fraction=boot["fraction"],
            with_replacement=boot["with_replacement"],
            bootstrap_samples=boot["samples"],
            pairwise=boot["pairwise"],
            k_stats=payload["k_stats"],
            scorer_stats=payload["scorer_stats"],
            example_count=payload["example_count"],
        )


def build_eval_report(
    scores_by_system: dict[str, dict[str, float]],
    labels_by_example: dict[str, FaithfulLabel],
    datasets: Sequence[str],
    k_values_by_system: dict[str, list[int]],
    scorer_stats_by_system: dict[str, dict],
    seed: int = 42,
    rounds: int = 100,
    fraction: float = 0.7,
    with_replacement: bool = False,
) -> EvalReport:
    """Assemble the report: per-system AUC, pairwise significance on shared
    resamples, and retrieval-size statistics.

    Every system must cover exactly the same example ids; the mismatch
    error lists the missing ids per system.
    """
    if not scores_by_system:
        raise ValueError("no systems to evaluate")
    example_ids = sorted(labels_by_example)
    for system, sys_scores in sorted(scores_by_system.items()):
        missing = sorted(set(example_ids) - set(sys_scores))
        extra = sorted(set(sys_scores) - set(example_ids))
        if missing or extra:
            raise ValueError(
                f"system {system!r} misaligned with labels: "
                f"missing ids {missing}, unexpected ids {extra}"
            )
    labels = [labels_by_example[eid] for eid in example_ids]
    vectors = {
        system: [scores_by_system[system][eid] for eid in example_ids]
        for system in scores_by_system
    }

    auc = {system: roc_auc(vec, labels) for system, vec in vectors.items()}
    systems = sorted(vectors)
    samples: dict[str, list[float]] = {}
    pairwise: dict[str, dict] = {}
    for i, sys_a in enumerate(systems):
        for sys_b in systems[i + 1:]:
            result = bootstrap_compare(
                vectors[sys_a],
                vectors[sys_b],
                labels,
                fraction=fraction,
                rounds=rounds,
                seed=seed,
                with_replacement=with_replacement,
            )
            samples.setdefault(sys_a, list(result.auc_a))
            samples.setdefault(sys_b, list(result.auc_b))
            pairwise[f"{sys_a}|{sys_b}"] = {
                "p_value": result.p_value,
                "t_statistic": result.t_statistic,
                "exactly_equal": result.exactly_equal,
                "degenerate": result.degenerate,
            }
    if len(systems) == 1:
        only = systems[0]
        samples[only] = _single_system_samples(
            vectors[only], labels, fraction, rounds, seed, with_replacement
        )

    k_stats = {}
    for system, values in sorted(k_values_by_system.items()):
        if not values:
            continue
        arr = np.asarray(values, dtype=float)
        k_stats[system] = {
            "mean": float(arr.mean()),
            "std": float(arr.std()),  # population std: defined for n == 1
            "count": int(arr.size),
        }

    return EvalReport(
        seed=seed,
        datasets=sorted(set(datasets)),
        auc=auc,
        bootstrap_rounds=rounds,
        bootstrap_fraction=fraction,
        with_replacement=with_replacement,
        bootstrap_samples=samples,
        pairwise=pairwise,
        k_stats=k_stats,
        scorer_stats={k: dict(v) for k, v in sorted(scorer_stats_by_system.items())},
        example_count=len(example_ids),
    )


def _single_system_samples(
    vector: Sequence[float],
    labels: Sequence[FaithfulLabel],
    fraction: float,
    rounds: int,
    seed: int,
    with_replacement: bool,
) -> list[float]:
    arr = np.asarray(vector, dtype=float)
    pos = _positives_mask(labels)
    size = max(2, int(round(fraction * len(labels))))
    out = []
    for r in range(rounds):
        rng = np.random.default_rng([seed, r])
        idx = _resample_indices(rng, pos, size, with_replacement)
        out.append(roc_auc(arr[idx], [labels[i] for i in idx]))
    return out
