"""Corpus diagnostics on the bundled toy corpus.

Shows the analysis toolkit: which document sentences each summary sentence
fuses (and how far apart they sit), extractive coverage/density, the
bigram-overlap bias probe, and entailment as a function of premise size.
"""

from entailsum import (
    LexicalScorer,
    coverage_density,
    greedy_fusion,
    load_dataset,
    premise_size_sweep,
    rouge2_recall,
)
from entailsum.analysis import corpus_stats, fusion_bucket_table
from entailsum.cli import toy_corpus_path

examples = load_dataset(toy_corpus_path())

# 1. Sentence fusion: how many source sentences feed each summary sentence.
records = []
for ex in examples:
    for unit in ex.summary.units:
        rec = greedy_fusion(ex.document, unit.sentence)
        records.append(rec)
        if len(rec.fused_indices) > 1:
            print(
                f"{ex.id} sentence {unit.sentence.index} fuses document "
                f"sentences {list(rec.fused_indices)} (window {rec.window})"
            )

print("\nfusion buckets (fused count x index window):")
table = fusion_bucket_table(records)
for fused, row in table.items():
    print(f"  {fused:>3} fused: {row}")

# 2. Extractiveness per dataset tag, Newsroom-style.
print("\nper-dataset statistics:")
for dataset, row in corpus_stats(examples).items():
    print(
        f"  {dataset:<12} coverage={row['coverage']:.2f} "
        f"density={row['density']:.2f} doc_tokens={row['doc_tokens']:.1f}"
    )

# 3. Bias probes on sentences annotated unfaithful: lexical overlap of the
#    retrieved premise, and entailment as the premise grows.
labelled = [ex for ex in examples if ex.sentence_labels is not None]
sweep = premise_size_sweep(labelled, LexicalScorer(), ks=range(1, 6))
print("\nmean entailment of unfaithful sentences per premise size k:")
for k, value in sweep.items():
    print(f"  k={k}: {value:.3f}")

one = examples[0]
cov, dens = coverage_density(one.document, one.summary)
print(f"\nexample {one.id}: coverage={cov:.2f} density={dens:.2f}")
print(
    "rouge2 recall of summary vs document:",
    round(
        rouge2_recall(
            " ".join(s.text for s in one.document.sentences),
            " ".join(u.sentence.text for u in one.summary.units),
        ),
        3,
    ),
)
