"""Margin hinge N-pairs loss over anchor/candidate batches.

For every positive-labeled anchor A_i, every other in-batch candidate P_j
(j != i, regardless of its own label) acts as a negative:

    value = (1/count) * sum_{i: label_i=1} sum_{j != i}
            max(0, ||A_i - P_i|| - ||A_i - P_j|| + margin)

where count = (#positive anchors) * (N - 1) is the number of (i, j) terms
considered, active or not.  A batch with no positive anchors (or N = 1)
yields value 0 and zero gradients.

Subgradient conventions, chosen so the result is deterministic: the hinge
contributes no gradient exactly at the boundary, and the gradient of
||u|| at u = 0 is 0 (an epsilon guard protects near-zero distances).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_DIST_EPS = 1e-12


def pairwise_distance(x, y) -> float:
    """Euclidean distance between two equal-length vectors."""
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if xv.shape != yv.shape or xv.ndim != 1:
        raise ValidationError(f"length mismatch: {xv.shape} vs {yv.shape}")
    if not (np.all(np.isfinite(xv)) and np.all(np.isfinite(yv))):
        raise ValidationError("inputs contain NaN or Inf")
    return float(math.sqrt(np.sum((xv - yv) ** 2)))


@dataclass(frozen=True)
class LossBatch:
    """Anchors, candidates, labels, and margin for one loss evaluation."""

    anchors: np.ndarray     # (n, d)
    candidates: np.ndarray  # (n, d)
    labels: np.ndarray      # (n,) ints in {0, 1}
    margin: float = 1.0

    def __post_init__(self):
        a = np.array(self.anchors, dtype=np.float64)
        p = np.array(self.candidates, dtype=np.float64)
        labels = np.asarray(self.labels)
        if a.ndim != 2:
            raise ValidationError(f"anchors must be a matrix, got ndim={a.ndim}")
        if a.shape != p.shape:
            raise ValidationError(f"anchors {a.shape} and candidates {p.shape} differ in shape")
        if labels.shape != (a.shape[0],):
            raise ValidationError(f"labels shape {labels.shape} does not match batch {a.shape[0]}")
        if not np.all(np.isin(labels, (0, 1))):
            raise ValidationError("labels must be 0 or 1")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(p))):
            raise ValidationError("batch contains NaN or Inf")
        if not (np.isfinite(self.margin) and self.margin >= 0):
            raise ValidationError(f"margin must be a non-negative real, got {self.margin}")
        object.__setattr__(self, "anchors", a)
        object.__setattr__(self, "candidates", p)
        object.__setattr__(self, "labels", labels.astype(np.int64))


@dataclass(frozen=True)
class LossResult:
    """Loss value, exact subgradients, and hinge bookkeeping."""

    value: float
    grad_anchors: np.ndarray
    grad_candidates: np.ndarray
    active_terms: int  # (i, j) pairs with a strictly positive hinge
    count: int         # (i, j) pairs considered: (#positives) * (N - 1)


def npairs_loss(batch: LossBatch) -> LossResult:
    """Evaluate the N-pairs hinge loss and its gradients for one batch."""
    a, p, labels = batch.anchors, batch.candidates, batch.labels
    n = a.shape[0]
    positive = labels == 1
    count = int(positive.sum()) * (n - 1)
    if count == 0:
        zeros = np.zeros_like(a)
        return LossResult(0.0, zeros, zeros.copy(), 0, 0)

    diff = a[:, None, :] - p[None, :, :]       # diff[i, j] = A_i - P_j
    dist = np.linalg.norm(diff, axis=2)        # (n, n)
    pos_dist = np.diag(dist)
    term = pos_dist[:, None] - dist + batch.margin
    off_diag = ~np.eye(n, dtype=bool)
    considered = positive[:, None] & off_diag
    active = considered & (term > 0.0)

    value = float(np.where(active, term, 0.0).sum() / count)

    # unit[i, j] = (A_i - P_j) / ||A_i - P_j||, zero where the distance vanishes
    unit = np.zeros_like(diff)
    nz = dist > _DIST_EPS
    unit[nz] = diff[nz] / dist[nz][:, None]
    unit_pos = unit[np.arange(n), np.arange(n)]  # (n, d), direction of A_i - P_i

    # each active (i, j) adds  d||A_i-P_i||/dθ − d||A_i-P_j||/dθ
    n_active = active.sum(axis=1)  # active terms per anchor i
    grad_a = n_active[:, None] * unit_pos - (active[:, :, None] * unit).sum(axis=1)
    grad_p = (active[:, :, None] * unit).sum(axis=0)  # row j collects +unit[i, j]
    grad_p -= n_active[:, None] * unit_pos            # row i collects -unit[i, i]

    return LossResult(
        value=value,
        grad_anchors=grad_a / count,
        grad_candidates=grad_p / count,
        active_terms=int(active.sum()),
        count=count,
    )
