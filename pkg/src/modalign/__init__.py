"""Cross-modal embedding alignment toolkit.

Aligns embeddings from two heterogeneous text modalities into a shared
space with a trainable 3-layer projection network, evaluates retrieval
quality against BM25 and raw-embedding baselines, and benchmarks
latency/throughput.
"""

from .bm25 import Bm25Index, bm25_retrieve, bm25_score, build_bm25_index, tokenize
from .errors import FormatError, ModalignError, TrainingError, ValidationError
from .evaluation import (
    EvalReport,
    RetrievalMetrics,
    benchmark_latency,
    emit_report,
    environment_descriptor,
    evaluate_retrieval,
    harmonic_mean,
)
from .loss import LossBatch, LossResult, npairs_loss, pairwise_distance
from .projection import (
    ForwardTrace,
    ParamGrads,
    ProjectionParams,
    backward,
    forward,
    init_params,
    load_params,
    project,
    save_params,
)
from .retrieval import (
    RetrievalIndex,
    RetrievalResult,
    build_index,
    project_and_query,
    query,
)
from .store import (
    EmbeddingSet,
    PairDataset,
    PairExample,
    generate_synthetic,
    load_embeddings,
    load_pairs,
    load_texts,
    save_embeddings,
    save_pairs,
    save_texts,
    synthetic_rotation,
)
from .training import TrainConfig, TrainReport, adam_step, sgd_step, train

__version__ = "0.1.0"

__all__ = [
    "Bm25Index",
    "EmbeddingSet",
    "EvalReport",
    "FormatError",
    "ForwardTrace",
    "LossBatch",
    "LossResult",
    "ModalignError",
    "PairDataset",
    "PairExample",
    "ParamGrads",
    "ProjectionParams",
    "RetrievalIndex",
    "RetrievalMetrics",
    "RetrievalResult",
    "TrainConfig",
    "TrainReport",
    "TrainingError",
    "ValidationError",
    "adam_step",
    "backward",
    "benchmark_latency",
    "bm25_retrieve",
    "bm25_score",
    "build_bm25_index",
    "build_index",
    "emit_report",
    "environment_descriptor",
    "evaluate_retrieval",
    "forward",
    "generate_synthetic",
    "harmonic_mean",
    "init_params",
    "load_embeddings",
    "load_pairs",
    "load_params",
    "load_texts",
    "npairs_loss",
    "pairwise_distance",
    "project",
    "project_and_query",
    "query",
    "save_embeddings",
    "save_pairs",
    "save_params",
    "save_texts",
    "sgd_step",
    "synthetic_rotation",
    "tokenize",
    "train",
]
