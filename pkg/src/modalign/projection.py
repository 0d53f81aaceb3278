"""Three-layer ReLU projection network: forward, analytic backward, checkpoints.

The network maps a modality-B embedding (dimension d) through two hidden
linear+ReLU stages of width h and back to dimension d:

    out = W3 @ relu(W2 @ relu(W1 @ x + b1) + b2) + b3

Gradients are hand-derived for this fixed architecture (no autodiff).  All
arithmetic is float64 so finite-difference checks stay tight; checkpoints
store float64 too.

PRJV1 checkpoint layout (little-endian): magic ``PRJV1\\0``, u32 d, u32 h,
then W1, b1, W2, b2, W3, b3 as float64 values in row-major order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError
from .store import STREAM_INIT, seeded_rng

PRJ_MAGIC = b"PRJV1\x00"
_PRJ_HEADER = struct.Struct("<6sII")  # magic, d, h


def _as_f64(name: str, arr, shape: tuple[int, ...]) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, order="C")
    if out.shape != shape:
        raise ValidationError(f"{name} has shape {out.shape}, expected {shape}")
    if not np.all(np.isfinite(out)):
        raise ValidationError(f"{name} contains NaN or Inf")
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ProjectionParams:
    """Weights and biases of the projection network (immutable)."""

    w1: np.ndarray  # (h, d)
    b1: np.ndarray  # (h,)
    w2: np.ndarray  # (h, h)
    b2: np.ndarray  # (h,)
    w3: np.ndarray  # (d, h)
    b3: np.ndarray  # (d,)

    def __post_init__(self):
        w1 = np.asarray(self.w1)
        if w1.ndim != 2:
            raise ValidationError(f"w1 must be a matrix, got ndim={w1.ndim}")
        h, d = w1.shape
        if d < 1 or h < 1:
            raise ValidationError(f"dimensions must be positive, got d={d}, h={h}")
        object.__setattr__(self, "w1", _as_f64("w1", self.w1, (h, d)))
        object.__setattr__(self, "b1", _as_f64("b1", self.b1, (h,)))
        object.__setattr__(self, "w2", _as_f64("w2", self.w2, (h, h)))
        object.__setattr__(self, "b2", _as_f64("b2", self.b2, (h,)))
        object.__setattr__(self, "w3", _as_f64("w3", self.w3, (d, h)))
        object.__setattr__(self, "b3", _as_f64("b3", self.b3, (d,)))

    @property
    def d(self) -> int:
        return self.w1.shape[1]

    @property
    def h(self) -> int:
        return self.w1.shape[0]

    @property
    def num_params(self) -> int:
        """Total scalar count across all weights and biases."""
        return sum(a.size for a in self.as_list())

    def as_list(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]

    @classmethod
    def from_list(cls, values) -> "ProjectionParams":
        w1, b1, w2, b2, w3, b3 = values
        return cls(w1=w1, b1=b1, w2=w2, b2=b2, w3=w3, b3=b3)


@dataclass(frozen=True)
class ParamGrads:
    """Gradients of a scalar loss with respect to every parameter tensor."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray

    def as_list(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]

    @classmethod
    def from_list(cls, values) -> "ParamGrads":
        w1, b1, w2, b2, w3, b3 = values
        return cls(w1=w1, b1=b1, w2=w2, b2=b2, w3=w3, b3=b3)


@dataclass(frozen=True)
class ForwardTrace:
    """Every intermediate of one forward pass, kept for the backward pass."""

    input: np.ndarray   # (d,)
    pre1: np.ndarray    # (h,)  W1 @ x + b1
    act1: np.ndarray    # (h,)  relu(pre1)
    pre2: np.ndarray    # (h,)  W2 @ act1 + b2
    act2: np.ndarray    # (h,)  relu(pre2)
    output: np.ndarray  # (d,)


@dataclass(frozen=True)
class BatchTrace:
    """Batched analog of ForwardTrace; rows are independent examples."""

    inputs: np.ndarray   # (n, d)
    pre1: np.ndarray     # (n, h)
    act1: np.ndarray     # (n, h)
    pre2: np.ndarray     # (n, h)
    act2: np.ndarray     # (n, h)
    outputs: np.ndarray  # (n, d)


def init_params(d: int, h: int, seed: int) -> ProjectionParams:
    """Seeded scaled-uniform init (bound sqrt(6/fan_in) per layer), zero biases."""
    if d < 1 or h < 1:
        raise ValidationError(f"d and h must be positive integers, got d={d}, h={h}")
    rng = seeded_rng(seed, STREAM_INIT)
    w1 = rng.uniform(-1.0, 1.0, (h, d)) * np.sqrt(6.0 / d)
    w2 = rng.uniform(-1.0, 1.0, (h, h)) * np.sqrt(6.0 / h)
    w3 = rng.uniform(-1.0, 1.0, (d, h)) * np.sqrt(6.0 / h)
    return ProjectionParams(w1=w1, b1=np.zeros(h), w2=w2, b2=np.zeros(h), w3=w3, b3=np.zeros(d))


def _check_vector(name: str, v, d: int) -> np.ndarray:
    out = np.asarray(v, dtype=np.float64)
    if out.shape != (d,):
        raise ValidationError(f"{name} has shape {out.shape}, expected ({d},)")
    if not np.all(np.isfinite(out)):
        raise ValidationError(f"{name} contains NaN or Inf")
    return out


def forward(params: ProjectionParams, e_b) -> ForwardTrace:
    """Project one modality-B vector; the trace feeds backward()."""
    x = _check_vector("input", e_b, params.d)
    pre1 = params.w1 @ x + params.b1
    act1 = np.maximum(pre1, 0.0)
    pre2 = params.w2 @ act1 + params.b2
    act2 = np.maximum(pre2, 0.0)
    out = params.w3 @ act2 + params.b3
    return ForwardTrace(input=x, pre1=pre1, act1=act1, pre2=pre2, act2=act2, output=out)


def backward(
    params: ProjectionParams, trace: ForwardTrace, grad_output
) -> tuple[ParamGrads, np.ndarray]:
    """Chain-rule gradients for one example; ReLU subgradient at 0 is 0.

    Returns the parameter gradients and the gradient with respect to the
    network input.
    """
    g = _check_vector("grad_output", grad_output, params.d)
    dw3 = np.outer(g, trace.act2)
    db3 = g.copy()
    dact2 = params.w3.T @ g
    dpre2 = dact2 * (trace.pre2 > 0.0)
    dw2 = np.outer(dpre2, trace.act1)
    db2 = dpre2
    dact1 = params.w2.T @ dpre2
    dpre1 = dact1 * (trace.pre1 > 0.0)
    dw1 = np.outer(dpre1, trace.input)
    db1 = dpre1
    dx = params.w1.T @ dpre1
    grads = ParamGrads(w1=dw1, b1=db1, w2=dw2, b2=db2, w3=dw3, b3=db3)
    return grads, dx


def forward_batch(params: ProjectionParams, x) -> BatchTrace:
    """Batched forward over row vectors (a mapped single-vector forward)."""
    xs = np.asarray(x, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != params.d:
        raise ValidationError(f"batch has shape {xs.shape}, expected (n, {params.d})")
    if not np.all(np.isfinite(xs)):
        raise ValidationError("batch contains NaN or Inf")
    pre1 = xs @ params.w1.T + params.b1
    act1 = np.maximum(pre1, 0.0)
    pre2 = act1 @ params.w2.T + params.b2
    act2 = np.maximum(pre2, 0.0)
    out = act2 @ params.w3.T + params.b3
    return BatchTrace(inputs=xs, pre1=pre1, act1=act1, pre2=pre2, act2=act2, outputs=out)


def backward_batch(params: ProjectionParams, trace: BatchTrace, grad_outputs) -> ParamGrads:
    """Parameter gradients summed over a batch (fixed reduction order)."""
    g = np.asarray(grad_outputs, dtype=np.float64)
    if g.shape != trace.outputs.shape:
        raise ValidationError(
            f"grad_outputs shape {g.shape} does not match outputs {trace.outputs.shape}"
        )
    dw3 = g.T @ trace.act2
    db3 = g.sum(axis=0)
    dact2 = g @ params.w3
    dpre2 = dact2 * (trace.pre2 > 0.0)
    dw2 = dpre2.T @ trace.act1
    db2 = dpre2.sum(axis=0)
    dact1 = dpre2 @ params.w2
    dpre1 = dact1 * (trace.pre1 > 0.0)
    dw1 = dpre1.T @ trace.inputs
    db1 = dpre1.sum(axis=0)
    return ParamGrads(w1=dw1, b1=db1, w2=dw2, b2=db2, w3=dw3, b3=db3)


def project(params: ProjectionParams, vectors) -> np.ndarray:
    """Projected outputs for a matrix of row vectors (float64)."""
    return forward_batch(params, vectors).outputs


def expected_checkpoint_size(d: int, h: int) -> int:
    """Byte length of a PRJV1 file for the given dimensions."""
    n_params = (h * d + h) + (h * h + h) + (d * h + d)
    return _PRJ_HEADER.size + 8 * n_params


def save_params(params: ProjectionParams, path) -> None:
    """Write a PRJV1 checkpoint; load_params reproduces it bit-exactly."""
    header = _PRJ_HEADER.pack(PRJ_MAGIC, params.d, params.h)
    payload = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in params.as_list())
    Path(path).write_bytes(header + payload)


def load_params(path) -> ProjectionParams:
    """Read a PRJV1 checkpoint, validating magic, dimensions, and length."""
    data = Path(path).read_bytes()
    if len(data) < _PRJ_HEADER.size:
        raise FormatError(f"{path}: truncated PRJV1 header ({len(data)} bytes)")
    magic, d, h = _PRJ_HEADER.unpack_from(data)
    if magic != PRJ_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if d == 0 or h == 0:
        raise FormatError(f"{path}: d and h must be nonzero (got {d}, {h})")
    if len(data) != expected_checkpoint_size(d, h):
        raise FormatError(
            f"{path}: expected {expected_checkpoint_size(d, h)} bytes, found {len(data)}"
        )
    flat = np.frombuffer(data, dtype="<f8", offset=_PRJ_HEADER.size)
    shapes = [(h, d), (h,), (h, h), (h,), (d, h), (d,)]
    arrays, pos = [], 0
    for shape in shapes:
        size = int(np.prod(shape))
        arrays.append(flat[pos : pos + size].reshape(shape))
        pos += size
    return ProjectionParams.from_list(arrays)
