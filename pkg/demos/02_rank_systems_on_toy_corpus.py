"""Meta-evaluating scoring systems on the bundled toy corpus.

Runs every system over the 12 bundled examples with the lexical scorer,
then computes ROC-AUC per system and pairwise bootstrap significance,
mirroring what `entailsum score` + `entailsum evaluate` do from the shell.
"""

from entailsum import (
    IdentitySplitter,
    LexicalScorer,
    RetrievalConfig,
    aggregate_summary,
    build_eval_report,
    fulldoc,
    infuse_k,
    infuse_sentence,
    infuse_sub,
    load_dataset,
    sentli,
    summac_zs,
)
from entailsum.cli import toy_corpus_path

examples = load_dataset(toy_corpus_path())
scorer = LexicalScorer()
splitter = IdentitySplitter()
config = RetrievalConfig()

scores = {name: {} for name in
          ("infuse", "infuse_sub", "infuse_k", "fulldoc", "summac_zs", "sentli")}
k_values = {"infuse": [], "infuse_sub": []}
labels = {}

for ex in examples:
    labels[ex.id] = ex.label
    per_system = {name: [] for name in scores}
    for unit in ex.summary.units:
        score, trace = infuse_sentence(ex.document, unit.sentence, scorer, config)
        per_system["infuse"].append(score)
        k_values["infuse"].append(trace.selected_count)

        sub_score, traces = infuse_sub(ex.document, unit, scorer, splitter, config)
        per_system["infuse_sub"].append(sub_score)
        k_values["infuse_sub"].extend(t.selected_count for t in traces)

        per_system["infuse_k"].append(infuse_k(ex.document, unit.sentence, scorer, k=5))
        per_system["summac_zs"].append(summac_zs(ex.document, unit.sentence, scorer))
        per_system["sentli"].append(sentli(ex.document, unit.sentence, scorer, k=5))
    for name in ("infuse", "infuse_sub", "infuse_k", "summac_zs", "sentli"):
        scores[name][ex.id] = aggregate_summary(per_system[name])
    scores["fulldoc"][ex.id] = fulldoc(ex.document, ex.summary, scorer, config)

report = build_eval_report(
    scores,
    labels,
    datasets=[ex.dataset for ex in examples],
    k_values_by_system=k_values,
    scorer_stats_by_system={},
    seed=42,
)

print(f"{'system':<12} {'ROC-AUC':>8}   retrieved sentences")
for system in sorted(report.auc):
    k = report.k_stats.get(system)
    k_text = f"{k['mean']:.2f} ± {k['std']:.2f}" if k else "-"
    print(f"{system:<12} {report.auc[system]:>8.4f}   {k_text}")

print("\npairwise significance (paired t-test on shared 70% resamples):")
for pair, res in sorted(report.pairwise.items()):
    note = "exactly equal" if res["exactly_equal"] else f"p={res['p_value']:.4f}"
    print(f"  {pair}: {note}")
