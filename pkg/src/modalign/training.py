"""Mini-batch trainer for the projection network.

Only positive pairs drive optimization: each batch's negatives are the
other in-batch candidates (j != i), so explicit label-0 dataset rows are
left to evaluation.  Gradients flow through the projection network only;
the input embedding sets are never modified.

Determinism: one seeded shuffle fixes batch composition for the whole run
(every epoch sees the same batches), initialization and the shuffle draw
from disjoint seed streams, and the optimizer updates are pure array math,
so identical config + data + seed reproduce checkpoints bit-exactly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingError, ValidationError
from .loss import LossBatch, npairs_loss
from .projection import (
    ProjectionParams,
    backward_batch,
    forward_batch,
    init_params,
    save_params,
)
from .store import STREAM_SHUFFLE, EmbeddingSet, PairDataset, seeded_rng

_OPTIMIZERS = ("adam", "sgd")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run.

    epochs and margin default to the published regime (5 epochs, margin 1.0);
    the rest are unpublished and were chosen so the synthetic alignment task
    trains to >= 0.95 held-out accuracy with defaults.
    """

    epochs: int = 5
    batch_size: int = 32
    learning_rate: float = 1e-3
    margin: float = 1.0
    seed: int = 0
    optimizer: str = "adam"
    shuffle: bool = True
    hidden_dim: int = 2048
    l2_normalize: bool = False  # normalize inputs before projection (off: raw encoder outputs)
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 2:
            raise ValidationError(
                f"batch_size must be >= 2 (a singleton batch has no negatives), got {self.batch_size}"
            )
        if not (np.isfinite(self.learning_rate) and self.learning_rate >= 0):
            raise ValidationError(f"learning_rate must be non-negative, got {self.learning_rate}")
        if not (np.isfinite(self.margin) and self.margin >= 0):
            raise ValidationError(f"margin must be non-negative, got {self.margin}")
        if self.optimizer not in _OPTIMIZERS:
            raise ValidationError(f"optimizer must be one of {_OPTIMIZERS}, got {self.optimizer!r}")
        if self.hidden_dim < 1:
            raise ValidationError(f"hidden_dim must be >= 1, got {self.hidden_dim}")


@dataclass
class TrainReport:
    """Per-epoch mean loss, wall time, and where the checkpoint landed."""

    epoch_losses: list[float] = field(default_factory=list)
    wall_seconds: float = 0.0
    checkpoint_path: str | None = None


@dataclass
class AdamState:
    """Bias-corrected first/second moment accumulators."""

    step: int
    m: list[np.ndarray]
    v: list[np.ndarray]

    @classmethod
    def zeros_like(cls, values) -> "AdamState":
        return cls(step=0, m=[np.zeros_like(v) for v in values], v=[np.zeros_like(v) for v in values])


def sgd_step(values, grads, cfg: TrainConfig):
    """Plain gradient step: v <- v - lr * g."""
    _check_shapes(values, grads)
    return [v - cfg.learning_rate * g for v, g in zip(values, grads)]


def adam_step(values, grads, state: AdamState, cfg: TrainConfig):
    """One Adam update with bias-corrected moments; returns (values, state)."""
    _check_shapes(values, grads)
    t = state.step + 1
    b1, b2, eps = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps
    new_vals, new_m, new_v = [], [], []
    for val, g, m, v in zip(values, grads, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        new_vals.append(val - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(m)
        new_v.append(v)
    return new_vals, AdamState(step=t, m=new_m, v=new_v)


def _check_shapes(values, grads) -> None:
    if len(values) != len(grads):
        raise ValidationError(f"{len(values)} parameter tensors vs {len(grads)} gradients")
    for v, g in zip(values, grads):
        if np.shape(v) != np.shape(g):
            raise ValidationError(f"parameter shape {np.shape(v)} vs gradient shape {np.shape(g)}")


def _maybe_normalize(rows: np.ndarray, enabled: bool) -> np.ndarray:
    if not enabled:
        return rows
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return rows / norms


def train(
    a_set: EmbeddingSet,
    b_set: EmbeddingSet,
    data: PairDataset,
    cfg: TrainConfig,
    checkpoint_path=None,
) -> tuple[ProjectionParams, TrainReport]:
    """Learn projection parameters on the dataset's positive pairs.

    Returns the trained parameters and a report with per-epoch mean loss.
    If checkpoint_path is given the parameters are also saved there.
    """
    if a_set.dim != b_set.dim:
        raise ValidationError(f"modality dims differ: A={a_set.dim}, B={b_set.dim}")
    data.validate_against(a_set, b_set)
    positives = data.positives()
    if not positives:
        raise ValidationError("dataset has no positive examples; nothing to train on")

    anchors = _maybe_normalize(
        a_set.rows(ex.anchor_id for ex in positives).astype(np.float64), cfg.l2_normalize
    )
    b_inputs = _maybe_normalize(
        b_set.rows(ex.candidate_id for ex in positives).astype(np.float64), cfg.l2_normalize
    )

    params = init_params(a_set.dim, cfg.hidden_dim, cfg.seed)
    values = params.as_list()
    adam = AdamState.zeros_like(values) if cfg.optimizer == "adam" else None

    n = len(positives)
    if cfg.shuffle:
        order = seeded_rng(cfg.seed, STREAM_SHUFFLE).permutation(n)
    else:
        order = np.arange(n)
    # one shuffle for the whole run: fixed batches keep lr=0 losses constant
    batches = []
    for start in range(0, n, cfg.batch_size):
        chunk = order[start : start + cfg.batch_size]
        if len(chunk) >= 2:  # singleton tail has no in-batch negatives
            batches.append(chunk)
    if not batches:
        raise ValidationError("no batch with >= 2 positive examples could be formed")

    t0 = time.perf_counter()
    report = TrainReport()
    ones = {len(b): np.ones(len(b), dtype=np.int64) for b in batches}
    for _ in range(cfg.epochs):
        epoch_losses = []
        for chunk in batches:
            params_now = ProjectionParams.from_list(values)
            trace = forward_batch(params_now, b_inputs[chunk])
            result = npairs_loss(
                LossBatch(
                    anchors=anchors[chunk],
                    candidates=trace.outputs,
                    labels=ones[len(chunk)],
                    margin=cfg.margin,
                )
            )
            if not np.isfinite(result.value):
                raise TrainingError(f"loss became non-finite ({result.value}); aborting")
            grads = backward_batch(params_now, trace, result.grad_candidates).as_list()
            if cfg.optimizer == "adam":
                values, adam = adam_step(values, grads, adam, cfg)
            else:
                values = sgd_step(values, grads, cfg)
            epoch_losses.append(result.value)
        report.epoch_losses.append(float(np.mean(epoch_losses)))
    report.wall_seconds = time.perf_counter() - t0

    trained = ProjectionParams.from_list(values)
    if checkpoint_path is not None:
        save_params(trained, checkpoint_path)
        report.checkpoint_path = str(checkpoint_path)
    return trained, report
