"""Multimodal rank fusion with an interference-style cross term.

Text and image relevance are scored independently, fused per document
either classically (sum of weighted probabilities) or with a signed
interference term, then ranked and evaluated with standard IR metrics.
"""

from .errors import InterfuseError, ValidationError
from .fusion import (
    FusedScore,
    FusionConfig,
    FusionInput,
    InterferenceDecision,
    classical_fuse,
    decide_interference,
    fuse_query,
    fuse_table,
    interference_rule,
    interference_score,
    quantum_fuse,
    rank,
)
from .ingest import (
    DenseVector,
    DocumentRecord,
    QrelSet,
    QueryRecord,
    ScoreTable,
    load_corpus,
    load_qrels,
    load_queries,
    load_scores,
    load_vectors,
    write_qrels,
    write_queries,
    write_scores,
    write_vectors,
)
from .metrics import (
    MetricReport,
    QueryMetrics,
    RunComparison,
    average_precision,
    compare_runs,
    evaluate_run,
    ndcg_at_k,
    overall_precision,
    precision_at_k,
)
from .porter import stem
from .runio import RankedRun, read_run, run_from_fused, write_run
from .textsim import (
    SparseTermVector,
    Vocabulary,
    build_index,
    expand_query,
    text_score,
    tokenize,
    vectorize,
)
from .visual import (
    Codebook,
    DescriptorSet,
    VisualHistogram,
    aggregate_query_images,
    image_score,
    learn_codebook,
    load_codebook,
    quantize,
    save_codebook,
)

__version__ = "0.1.0"

__all__ = [
    "Codebook",
    "DenseVector",
    "DescriptorSet",
    "DocumentRecord",
    "FusedScore",
    "FusionConfig",
    "FusionInput",
    "InterferenceDecision",
    "InterfuseError",
    "MetricReport",
    "QrelSet",
    "QueryMetrics",
    "QueryRecord",
    "RankedRun",
    "RunComparison",
    "ScoreTable",
    "SparseTermVector",
    "ValidationError",
    "VisualHistogram",
    "Vocabulary",
    "aggregate_query_images",
    "average_precision",
    "build_index",
    "classical_fuse",
    "compare_runs",
    "decide_interference",
    "evaluate_run",
    "expand_query",
    "fuse_query",
    "fuse_table",
    "image_score",
    "interference_rule",
    "interference_score",
    "learn_codebook",
    "load_codebook",
    "load_corpus",
    "load_qrels",
    "load_queries",
    "load_scores",
    "load_vectors",
    "ndcg_at_k",
    "overall_precision",
    "precision_at_k",
    "quantize",
    "quantum_fuse",
    "rank",
    "read_run",
    "run_from_fused",
    "save_codebook",
    "stem",
    "text_score",
    "tokenize",
    "vectorize",
    "write_qrels",
    "write_queries",
    "write_run",
    "write_scores",
    "write_vectors",
]
