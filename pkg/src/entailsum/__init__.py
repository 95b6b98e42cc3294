"""Faithfulness scoring for machine-generated summaries with off-the-shelf
NLI scorers: variable-size premise retrieval, sub-sentence reasoning,
fixed-context baselines, and a full meta-evaluation harness."""

from .algorithms import (
    EntailmentColumn,
    EntailmentMatrix,
    RetrievalConfig,
    RetrievalTrace,
    StopReason,
    aggregate_subsentences,
    aggregate_summary,
    build_matrix,
    chunk_document,
    fulldoc,
    infuse_k,
    infuse_sentence,
    rank_sentences,
    sentli,
    summac_zs,
)
from .analysis import (
    FusionRecord,
    coverage_density,
    extractive_fragments,
    greedy_fusion,
    premise_size_sweep,
    rouge2_recall,
)
from .core import (
    AnnotationScheme,
    BenchmarkExample,
    Document,
    ErrorType,
    FaithfulLabel,
    NliVerdict,
    Sentence,
    Summary,
    SummaryUnit,
    standardize_label,
    summary_label_from_sentences,
)
from .ingest import DatasetError, load_dataset, segment, serialize_dataset
from .metaeval import (
    BootstrapResult,
    EvalReport,
    ScoredExample,
    UndefinedAucError,
    bootstrap_compare,
    build_eval_report,
    error_type_histogram,
    roc_auc,
)
from .scorers import (
    CacheKey,
    LexicalScorer,
    MalformedResponseError,
    RemoteScorer,
    ScoreCache,
    ScoreRequest,
    Scorer,
    ScorerError,
    ScorerStats,
    ScorerUnavailableError,
    TableScorer,
    cached,
)
from .splitting import (
    IdentitySplitter,
    RemoteSplitter,
    SplitCache,
    SplitResult,
    infuse_sub,
    split_sentence,
)

__version__ = "0.1.0"
