"""Scoring one document/summary pair, step by step.

Walks through the pieces behind a faithfulness score: the bidirectional
entailment column, the ranked evidence list, the incremental premise
expansion with its neutral-probability stop, and the fixed-context
baselines, all with the offline lexical scorer.
"""

from entailsum import (
    Document,
    LexicalScorer,
    Sentence,
    Summary,
    SummaryUnit,
    build_matrix,
    fulldoc,
    infuse_k,
    infuse_sentence,
    rank_sentences,
    sentli,
    summac_zs,
)

doc = Document.from_texts(
    [
        "The city council approved the new transit plan on Tuesday.",
        "The plan adds four bus routes along a riverfront district that crosses town.",
        "Officials said construction will begin next spring.",
        "Local shops welcomed the extra foot traffic.",
    ]
)
claim = Sentence(0, "The council approved a transit plan that adds four bus routes.")
scorer = LexicalScorer()

print("document sentences:")
for s in doc.sentences:
    print(f"  [{s.index}] {s.text}")
print(f"\nclaim: {claim.text}\n")

# 1. Each document sentence is scored against the claim in both directions;
#    the sum of the two entailment probabilities ranks the evidence.
column = build_matrix(doc, claim, scorer)
ranked = rank_sentences(column.reweighted)
print("evidence ranking (forward + reverse entailment):")
for m in ranked:
    print(
        f"  [{m}] weight={column.reweighted[m]:.3f} "
        f"(fwd {column.forward[m].entailment:.3f}, "
        f"rev {column.reverse[m].entailment:.3f})"
    )

# 2. The premise grows one ranked sentence at a time and stops when the
#    neutral probability stops falling.
score, trace = infuse_sentence(doc, claim, scorer)
print(f"\nincremental retrieval: admitted {trace.selected_count} sentence(s), "
      f"stop reason {trace.stop_reason.value}")
print(f"neutral sequence per step: {[round(u, 3) for u in trace.neutral_sequence]}")
print(f"claim score: {score:.3f}")

# 3. The baselines answer the same question with fixed premises.
summary = Summary(units=(SummaryUnit(claim),))
print("\nbaselines:")
print(f"  top-1 sentence (summac_zs):    {summac_zs(doc, claim, scorer):.3f}")
print(f"  fixed top-2 ranked (infuse_k): {infuse_k(doc, claim, scorer, k=2):.3f}")
print(f"  top-e/top-c union (sentli):    {sentli(doc, claim, scorer, k=2):.3f}")
print(f"  whole document (fulldoc):      {fulldoc(doc, summary, scorer):.3f}")
print(f"\nscorer stats: {scorer.stats.as_dict()}")
