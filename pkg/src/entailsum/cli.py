"""Command-line surface: scoring runs, meta-evaluation, corpus analyses,
and cache management.

Scoring and evaluation are separate commands joined by a documented scores
file, so expensive scoring runs once while metric settings can be iterated
cheaply. All randomness flows from one ``--seed`` recorded in the outputs;
with an offline scorer, fixed seed, and any ``--jobs`` value the emitted
bytes are identical run to run.

Exit codes: 0 ok, 1 usage, 2 data error, 3 scorer-service error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

from . import analysis
from .algorithms import (
    RetrievalConfig,
    aggregate_summary,
    fulldoc,
    infuse_k,
    infuse_sentence,
    sentli,
    summac_zs,
)
from .core import BenchmarkExample, FaithfulLabel
from .ingest import DatasetError, load_dataset
from .metaeval import (
    ScoredExample,
    build_eval_report,
    error_type_histogram,
    export_histograms_csv,
)
from .scorers import (
    CountingScorer,
    LexicalScorer,
    RemoteScorer,
    ScoreCache,
    Scorer,
    ScorerError,
    TableScorer,
)
from .splitting import IdentitySplitter, RemoteSplitter, SplitCache, infuse_sub

SYSTEMS = ("infuse", "infuse_sub", "infuse_k", "fulldoc", "summac_zs", "sentli")
SERVICE_URL_ENV = "ENTAILSUM_SERVICE_URL"
SCORES_SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SCORER = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map usage -> 1
        raise UsageError(message)


def toy_corpus_path() -> Path:
    """Location of the bundled 12-example toy corpus."""
    return Path(resources.files("entailsum").joinpath("data/toy.jsonl"))


def _resolve_dataset(value: str) -> Path:
    if value == "toy":
        return toy_corpus_path()
    return Path(value)


def _service_url(spec: str, kind: str) -> str:
    if ":" in spec:
        return spec.split(":", 1)[1]
    url = os.environ.get(SERVICE_URL_ENV, "")
    if not url:
        raise UsageError(
            f"{kind} 'remote' needs an explicit URL (remote:http://...) or "
            f"the {SERVICE_URL_ENV} environment variable"
        )
    return url


def make_scorer(spec: str) -> Scorer:
    """Build the scorer named by ``--scorer``: lexical, remote[:URL], or
    fake:path (a JSON table of verdicts)."""
    if spec == "lexical":
        return LexicalScorer()
    if spec == "remote" or spec.startswith("remote:"):
        return RemoteScorer(_service_url(spec, "scorer"))
    if spec.startswith("fake:"):
        path = Path(spec.split(":", 1)[1])
        try:
            entries = json.loads(path.read_text(encoding="utf-8"))
            table = {
                (e["premise"], e["hypothesis"]): _verdict_from(e) for e in entries
            }
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise DatasetError(f"unusable fake-scorer table {path}: {exc}") from exc
        import hashlib

        digest = hashlib.sha256(path.read_bytes()).hexdigest()[:12]
        return TableScorer(table, scorer_id=f"fake:{digest}")
    raise UsageError(f"unknown scorer {spec!r} (use lexical, remote:URL, fake:path)")


def _verdict_from(entry: dict):
    from .core import NliVerdict

    return NliVerdict(entry["entailment"], entry["neutral"], entry["contradiction"])


def make_splitter(spec: str, cache_dir: Path | None):
    if spec == "identity":
        return IdentitySplitter()
    if spec == "remote" or spec.startswith("remote:"):
        splitter = RemoteSplitter(_service_url(spec, "splitter"))
        path = cache_dir / "split_cache.jsonl" if cache_dir else None
        return SplitCache(splitter, path)
    raise UsageError(f"unknown splitter {spec!r} (use identity or remote:URL)")


# ---------------------------------------------------------------------------
# score
# ---------------------------------------------------------------------------


def _score_one_example(
    example: BenchmarkExample,
    system: str,
    scorer: Scorer,
    splitter,
    config: RetrievalConfig,
    k: int,
) -> tuple[float, list[int] | None, list[dict]]:
    """Returns (summary score, retrieval sizes or None, trace rows)."""
    doc, summary = example.document, example.summary
    traces: list[dict] = []
    if system == "fulldoc":
        return fulldoc(doc, summary, scorer, config), None, traces

    scores: list[float] = []
    k_values: list[int] | None = [] if system in ("infuse", "infuse_sub", "infuse_k") else None
    for unit in summary.units:
        if system == "infuse":
            score, trace = infuse_sentence(doc, unit.sentence, scorer, config)
            k_values.append(trace.selected_count)
            traces.append(_trace_row(example.id, system, unit.sentence.index, None, trace))
        elif system == "infuse_sub":
            score, unit_traces = infuse_sub(doc, unit, scorer, splitter, config)
            for part_index, trace in enumerate(unit_traces):
                k_values.append(trace.selected_count)
                traces.append(
                    _trace_row(example.id, system, unit.sentence.index, part_index, trace)
                )
        elif system == "infuse_k":
            score = infuse_k(doc, unit.sentence, scorer, k, config)
            k_values.append(min(k, len(doc)))
        elif system == "summac_zs":
            score = summac_zs(doc, unit.sentence, scorer)
        elif system == "sentli":
            score = sentli(doc, unit.sentence, scorer, k)
        else:
            raise UsageError(f"unknown system {system!r}")
        scores.append(score)
    return aggregate_summary(scores), k_values, traces


def _trace_row(example_id, system, unit_index, part_index, trace) -> dict:
    row = {
        "example_id": example_id,
        "system": system,
        "unit_index": unit_index,
        "ranked_indices": list(trace.ranked_indices),
        "selected_count": trace.selected_count,
        "neutral_sequence": list(trace.neutral_sequence),
        "final_entailment": trace.final_entailment,
        "stop_reason": trace.stop_reason.value,
    }
    if part_index is not None:
        row["part_index"] = part_index
    return row


def cmd_score(args) -> int:
    examples = load_dataset(_resolve_dataset(args.dataset), args.format)
    systems = [s.strip() for s in args.systems.split(",") if s.strip()]
    if not systems:
        raise UsageError("at least one system is required")
    for system in systems:
        if system not in SYSTEMS:
            raise UsageError(
                f"unknown system {system!r}; choose from {', '.join(SYSTEMS)}"
            )

    cache_dir = Path(args.cache_dir) if args.cache_dir else None
    if cache_dir:
        cache_dir.mkdir(parents=True, exist_ok=True)
    base = make_scorer(args.scorer)
    cache = ScoreCache(base, cache_dir / "nli_cache.jsonl" if cache_dir else None)
    splitter = make_splitter(args.splitter, cache_dir)
    config = RetrievalConfig(
        fixed_k=args.k,
        max_premise_tokens=args.max_premise_tokens,
        use_reverse=not args.no_reverse,
        chunk_budget=args.chunk_budget,
    )

    score_rows: list[dict] = []
    stats_rows: list[dict] = []
    trace_rows: list[dict] = []
    for system in systems:  # systems run sequentially for stable cache stats
        counting = CountingScorer(cache)
        hits_before = cache.stats.cache_hits

        def work(example, _system=system, _scorer=counting):
            return example.id, _score_one_example(
                example, _system, _scorer, splitter, config, args.k
            )

        if args.jobs > 1:
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                results = dict(pool.map(work, examples))
        else:
            results = dict(map(work, examples))

        for example in examples:
            score, k_values, traces = results[example.id]
            row = {
                "type": "score",
                "example_id": example.id,
                "system": system,
                "score": score,
                "label": example.label.value,
            }
            if k_values is not None:
                row["k_values"] = k_values
            score_rows.append(row)
            trace_rows.extend(traces)

        stats = counting.stats
        hits = cache.stats.cache_hits - hits_before
        stats_rows.append(
            {
                "type": "stats",
                "system": system,
                "total_calls": stats.total_calls,
                "cache_hits": hits,
                "batch_count": stats.batch_count,
            }
        )

    header = {
        "type": "header",
        "schema_version": SCORES_SCHEMA_VERSION,
        "dataset": _resolve_dataset(args.dataset).name,
        "datasets": sorted({ex.dataset for ex in examples}),
        "systems": systems,
        "scorer": cache.scorer_id,
        "splitter": splitter.splitter_id,
        "seed": args.seed,
        "config": {
            "k": args.k,
            "max_premise_tokens": args.max_premise_tokens,
            "use_reverse": not args.no_reverse,
            "chunk_budget": args.chunk_budget,
        },
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for row in sorted(score_rows, key=lambda r: (r["system"], r["example_id"])):
            fh.write(json.dumps(row, sort_keys=True) + "\n")
        for row in stats_rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")

    if args.traces:
        traces_path = Path(args.traces)
        traces_path.parent.mkdir(parents=True, exist_ok=True)
        with open(traces_path, "w", encoding="utf-8") as fh:
            for row in sorted(
                trace_rows,
                key=lambda r: (
                    r["system"],
                    r["example_id"],
                    r["unit_index"],
                    r.get("part_index", -1),
                ),
            ):
                fh.write(json.dumps(row, sort_keys=True) + "\n")

    for row in stats_rows:
        print(
            f"[stats] {row['system']}: total_calls={row['total_calls']} "
            f"cache_hits={row['cache_hits']} batch_count={row['batch_count']}"
        )
    print(f"wrote {len(score_rows)} scores to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def _read_scores_file(path: Path):
    header = None
    scores: dict[str, dict[str, float]] = {}
    labels: dict[str, FaithfulLabel] = {}
    k_values: dict[str, list[int]] = {}
    stats: dict[str, dict] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except ValueError as exc:
                raise DatasetError(f"{path}:{line_no}: invalid JSON ({exc})") from None
            kind = row.get("type")
            if kind == "header":
                if row.get("schema_version") != SCORES_SCHEMA_VERSION:
                    raise DatasetError(
                        f"{path}:{line_no}: unsupported scores schema "
                        f"{row.get('schema_version')!r}"
                    )
                header = row
            elif kind == "score":
                try:
                    record = ScoredExample(
                        example_id=row["example_id"],
                        system_id=row["system"],
                        score=float(row["score"]),
                        label=FaithfulLabel(row["label"]),
                    )
                except (KeyError, TypeError, ValueError) as exc:
                    raise DatasetError(
                        f"{path}:{line_no}: invalid score row ({exc})"
                    ) from None
                sys_scores = scores.setdefault(record.system_id, {})
                if record.example_id in sys_scores:
                    raise DatasetError(
                        f"{path}:{line_no}: duplicate score for "
                        f"({record.system_id}, {record.example_id})"
                    )
                sys_scores[record.example_id] = record.score
                if labels.setdefault(record.example_id, record.label) is not record.label:
                    raise DatasetError(
                        f"{path}:{line_no}: conflicting labels for {record.example_id}"
                    )
                if "k_values" in row:
                    k_values.setdefault(record.system_id, []).extend(row["k_values"])
            elif kind == "stats":
                stats[row["system"]] = {
                    "total_calls": row["total_calls"],
                    "cache_hits": row["cache_hits"],
                    "batch_count": row["batch_count"],
                }
            else:
                raise DatasetError(f"{path}:{line_no}: unknown row type {kind!r}")
    if header is None or not scores:
        raise DatasetError(f"{path}: not a scores file (missing header or scores)")
    return header, scores, labels, k_values, stats


def cmd_evaluate(args) -> int:
    all_scores: dict[str, dict[str, float]] = {}
    all_labels: dict[str, FaithfulLabel] = {}
    all_k: dict[str, list[int]] = {}
    all_stats: dict[str, dict] = {}
    datasets: set[str] = set()
    for path in args.scores:
        header, scores, labels, k_values, stats = _read_scores_file(Path(path))
        datasets.update(header.get("datasets", []))
        for system, sys_scores in scores.items():
            merged = all_scores.setdefault(system, {})
            for eid, score in sys_scores.items():
                if eid in merged:
                    raise DatasetError(
                        f"duplicate score for ({system}, {eid}) across files"
                    )
                merged[eid] = score
        for eid, label in labels.items():
            if all_labels.setdefault(eid, label) is not label:
                raise DatasetError(f"conflicting labels for {eid} across files")
        for system, values in k_values.items():
            all_k.setdefault(system, []).extend(values)
        all_stats.update(stats)

    try:
        report = build_eval_report(
            all_scores,
            all_labels,
            datasets=sorted(datasets),
            k_values_by_system=all_k,
            scorer_stats_by_system=all_stats,
            seed=args.seed,
            rounds=args.bootstrap_rounds,
            fraction=args.bootstrap_fraction,
            with_replacement=args.with_replacement,
        )
    except ValueError as exc:
        raise DatasetError(str(exc)) from None

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.to_json(), encoding="utf-8")

    print(f"{'system':<12} {'auc':>8}   k_avg")
    for system in sorted(report.auc):
        k = report.k_stats.get(system)
        k_text = f"{k['mean']:.2f} ± {k['std']:.2f}" if k else "-"
        print(f"{system:<12} {report.auc[system]:>8.4f}   {k_text}")
    for pair, res in sorted(report.pairwise.items()):
        marker = " (exactly equal)" if res["exactly_equal"] else ""
        print(f"{pair}: p={res['p_value']:.4f}{marker}")
    print(f"wrote report to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def _write_csv(path: Path, headers: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        writer.writerows(rows)


def _write_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def cmd_analyze(args) -> int:
    examples = load_dataset(_resolve_dataset(args.dataset), args.format)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    fusion_rows = []
    all_records = []
    for example in examples:
        for unit in example.summary.units:
            rec = analysis.greedy_fusion(example.document, unit.sentence)
            all_records.append(rec)
            fusion_rows.append(
                [
                    example.id,
                    unit.sentence.index,
                    len(rec.fused_indices),
                    rec.window,
                    int(rec.zero_coverage),
                    " ".join(str(i) for i in rec.fused_indices),
                ]
            )
    _write_csv(
        out_dir / "fusion_records.csv",
        ["example_id", "unit_index", "fused_count", "window", "zero_coverage", "fused_indices"],
        fusion_rows,
    )
    buckets = analysis.fusion_bucket_table(all_records)
    _write_json(out_dir / "fusion_buckets.json", buckets)
    _write_csv(
        out_dir / "fusion_buckets.csv",
        ["fused_count", "window", "count"],
        [[fb, wb, buckets[fb][wb]] for fb in analysis.FUSED_BUCKETS for wb in analysis.WINDOW_BUCKETS],
    )

    cov_rows = []
    for example in examples:
        cov, dens = analysis.coverage_density(example.document, example.summary)
        cov_rows.append([example.id, example.dataset, cov, dens])
    _write_csv(
        out_dir / "coverage_density.csv",
        ["example_id", "dataset", "coverage", "density"],
        cov_rows,
    )

    stats = analysis.corpus_stats(examples)
    _write_json(out_dir / "corpus_stats.json", stats)
    _write_csv(
        out_dir / "corpus_stats.csv",
        ["dataset", "examples", "doc_tokens", "summary_sentences", "summary_tokens", "coverage", "density"],
        [
            [ds, int(row["examples"]), row["doc_tokens"], row["summary_sentences"],
             row["summary_tokens"], row["coverage"], row["density"]]
            for ds, row in stats.items()
        ],
    )

    labelled = [ex for ex in examples if ex.sentence_labels is not None]
    has_unfaithful = any(
        lab is FaithfulLabel.UNFAITHFUL
        for ex in labelled
        for lab in ex.sentence_labels
    )
    if not labelled or not has_unfaithful:
        print("no per-sentence labels with unfaithful sentences; bias tables skipped")
        return EXIT_OK

    scorer = make_scorer(args.scorer)
    config = RetrievalConfig()

    bias_rows = []
    hist_records = []
    for example in labelled:
        for unit, label in zip(example.summary.units, example.sentence_labels):
            score, trace = infuse_sentence(example.document, unit.sentence, scorer, config)
            premise = " ".join(
                example.document.sentences[i].text
                for i in trace.ranked_indices[: trace.selected_count]
            )
            if label is FaithfulLabel.UNFAITHFUL:
                bias_rows.append(
                    [
                        example.id,
                        unit.sentence.index,
                        analysis.rouge2_recall(premise, unit.sentence.text),
                        score,
                    ]
                )
                errors = (
                    example.sentence_errors[unit.sentence.index]
                    if example.sentence_errors is not None
                    else frozenset()
                )
                if errors:
                    hist_records.append((score, errors))
            else:
                hist_records.append((score, FaithfulLabel.FAITHFUL))
    _write_csv(
        out_dir / "bias_rouge2_entailment.csv",
        ["example_id", "unit_index", "rouge2_recall", "entailment"],
        bias_rows,
    )

    sweep = analysis.premise_size_sweep(labelled, scorer, list(range(1, args.sweep_max_k + 1)))
    _write_csv(
        out_dir / "premise_size_sweep.csv",
        ["k", "mean_entailment_unfaithful"],
        [[k, v] for k, v in sorted(sweep.items())],
    )

    panels = error_type_histogram(hist_records, bins=args.bins)
    export_histograms_csv(panels, out_dir / "error_type_histogram.csv")
    _write_json(
        out_dir / "error_type_histogram.json",
        {panel: counts.tolist() for panel, counts in panels.items()},
    )

    print(f"wrote analysis tables to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# cache
# ---------------------------------------------------------------------------


def cmd_cache(args) -> int:
    cache_dir = Path(args.cache_dir)
    nli_path = cache_dir / "nli_cache.jsonl"
    split_path = cache_dir / "split_cache.jsonl"
    if args.clear:
        removed = 0
        for path in (nli_path, split_path):
            if path.exists():
                path.unlink()
                removed += 1
        print(f"cleared {removed} cache file(s) under {cache_dir}")
        return EXIT_OK
    for path in (nli_path, split_path):
        if path.exists():
            with open(path, encoding="utf-8") as fh:
                entries = max(sum(1 for line in fh if line.strip()) - 1, 0)
            print(f"{path}: {entries} entries")
        else:
            print(f"{path}: absent")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="entailsum",
        description="NLI-based faithfulness scoring and meta-evaluation "
        "of machine-generated summaries.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_score = sub.add_parser("score", help="score a dataset with one or more systems")
    p_score.add_argument("--dataset", required=True, help="dataset path or 'toy'")
    p_score.add_argument("--format", default="canonical",
                         choices=["canonical", "aggrefact", "diversumm"])
    p_score.add_argument("--systems", default=",".join(SYSTEMS),
                         help="comma-separated subset of: " + ", ".join(SYSTEMS))
    p_score.add_argument("--scorer", default="lexical",
                         help="lexical | remote[:URL] | fake:path")
    p_score.add_argument("--splitter", default="identity",
                         help="identity | remote[:URL]")
    p_score.add_argument("--k", type=int, default=5,
                         help="fixed retrieval size for infuse_k and sentli")
    p_score.add_argument("--max-premise-tokens", type=int, default=500)
    p_score.add_argument("--chunk-budget", type=int, default=500)
    p_score.add_argument("--no-reverse", action="store_true",
                         help="rank by forward entailment only")
    p_score.add_argument("--seed", type=int, default=42)
    p_score.add_argument("--jobs", type=int, default=1)
    p_score.add_argument("--out", required=True, help="scores JSONL path")
    p_score.add_argument("--cache-dir", default=None)
    p_score.add_argument("--traces", default=None,
                         help="optional retrieval-trace JSONL path")
    p_score.set_defaults(func=cmd_score)

    p_eval = sub.add_parser("evaluate", help="build the evaluation report")
    p_eval.add_argument("--scores", required=True, nargs="+",
                        help="one or more scores files")
    p_eval.add_argument("--out", required=True, help="report JSON path")
    p_eval.add_argument("--seed", type=int, default=42)
    p_eval.add_argument("--bootstrap-rounds", type=int, default=100)
    p_eval.add_argument("--bootstrap-fraction", type=float, default=0.7)
    p_eval.add_argument("--with-replacement", action="store_true")
    p_eval.set_defaults(func=cmd_evaluate)

    p_an = sub.add_parser("analyze", help="corpus diagnostics tables")
    p_an.add_argument("--dataset", required=True, help="dataset path or 'toy'")
    p_an.add_argument("--format", default="canonical",
                      choices=["canonical", "aggrefact", "diversumm"])
    p_an.add_argument("--out", required=True, help="output directory")
    p_an.add_argument("--scorer", default="lexical",
                      help="scorer for the bias probes")
    p_an.add_argument("--bins", type=int, default=10)
    p_an.add_argument("--sweep-max-k", type=int, default=10)
    p_an.set_defaults(func=cmd_analyze)

    p_cache = sub.add_parser("cache", help="inspect or reset the score caches")
    p_cache.add_argument("--cache-dir", required=True)
    p_cache.add_argument("--clear", action="store_true")
    p_cache.set_defaults(func=cmd_cache)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DatasetError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ScorerError as exc:
        print(f"scorer error: {exc}", file=sys.stderr)
        return EXIT_SCORER


def entry_point() -> None:
    sys.exit(main())
