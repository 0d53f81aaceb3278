"""Exact top-k retrieval over an embedding pool by linear scan.

No approximate structures: pools in this toolkit are ~1000 entries, so an
exact scan keeps evaluation unambiguous and the latency benchmark honest.
Scores are distances (ascending) under ``euclidean`` and similarities
(descending) under ``cosine``; ties always break by insertion order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ValidationError
from .projection import ProjectionParams, forward
from .store import EmbeddingSet

METRICS = ("euclidean", "cosine")


@dataclass(frozen=True)
class RetrievalResult:
    """Ranked (id, score) pairs; ordering follows the metric's semantics."""

    items: tuple[tuple[str, float], ...]
    metric: str

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(i for i, _ in self.items)

    def top(self) -> tuple[str, float]:
        return self.items[0]


@dataclass(frozen=True)
class RetrievalIndex:
    """Candidate pool prepared for exact search under one metric."""

    entries: EmbeddingSet
    metric: str = "euclidean"

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValidationError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if len(self.entries) == 0:
            raise ValidationError("cannot index an empty embedding set")
        if self.metric == "cosine" and np.any(self._norms == 0.0):
            raise ValidationError("cosine index rejects zero-norm vectors")

    @cached_property
    def _matrix(self) -> np.ndarray:
        return self.entries.vectors.astype(np.float64)

    @cached_property
    def _norms(self) -> np.ndarray:
        return np.linalg.norm(self._matrix, axis=1)

    def __len__(self) -> int:
        return len(self.entries)


def build_index(entries: EmbeddingSet, metric: str = "euclidean") -> RetrievalIndex:
    """Index every entry of the set for exact top-k search."""
    return RetrievalIndex(entries=entries, metric=metric)


def query(index: RetrievalIndex, q, k: int) -> RetrievalResult:
    """Exact top-k under the index metric with insertion-order tie-break."""
    qv = np.asarray(q, dtype=np.float64).reshape(-1)
    if qv.shape != (index.entries.dim,):
        raise ValidationError(f"query has shape {qv.shape}, expected ({index.entries.dim},)")
    if not np.all(np.isfinite(qv)):
        raise ValidationError("query contains NaN or Inf")
    if not 1 <= k <= len(index):
        raise ValidationError(f"k must be in [1, {len(index)}], got {k}")

    if index.metric == "euclidean":
        scores = np.linalg.norm(index._matrix - qv, axis=1)
        order = np.argsort(scores, kind="stable")
    else:
        qnorm = float(np.linalg.norm(qv))
        if qnorm == 0.0:
            raise ValidationError("cosine query must have nonzero norm")
        scores = (index._matrix @ qv) / (index._norms * qnorm)
        order = np.argsort(-scores, kind="stable")

    top = order[:k]
    items = tuple((index.entries.ids[i], float(scores[i])) for i in top)
    return RetrievalResult(items=items, metric=index.metric)


def project_and_query(
    params: ProjectionParams, index: RetrievalIndex, b_vector, k: int
) -> RetrievalResult:
    """Project a modality-B vector, then search the modality-A index."""
    return query(index, forward(params, b_vector).output, k)
