"""Embedding sets, pair datasets, their on-disk formats, and synthetic data.

EMBV1 binary layout (everything little-endian):

    bytes 0-5    magic ``EMBV1\\0``
    bytes 6-9    u32 row count
    bytes 10-13  u32 vector dimension
    bytes 14-21  u64 byte length L of the id block
    next L bytes UTF-8 ids joined by ``\\n`` (no trailing newline)
    rest         count * dim float32 values, row-major

Pair datasets are JSON lines, one ``{"anchor_id", "candidate_id", "label"}``
object per line.  Text corpora (needed only for BM25 runs) are JSON lines of
``{"id", "text"}``.

The synthetic generator builds two modalities that are useless to compare
directly but exactly alignable: modality A is unit-normalized Gaussian
directions, modality B is a seeded random rotation of A plus optional
Gaussian noise.  Every draw is keyed to the seed, so identical arguments
produce bit-identical files.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import FormatError, ValidationError

EMB_MAGIC = b"EMBV1\x00"
_EMB_HEADER = struct.Struct("<6sIIQ")  # magic, count, dim, id-block byte length

_U64 = (1 << 64) - 1

# Disjoint rng stream indices, one per independent random ingredient.
_STREAM_A = 0
_STREAM_Q = 1
_STREAM_NOISE = 2
_STREAM_NEG = 3
STREAM_INIT = 10     # projection weight init
STREAM_SHUFFLE = 11  # training batch shuffle


def seeded_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Deterministic generator for ``seed``; distinct ``stream`` values never overlap."""
    seq = np.random.SeedSequence(seed & _U64, spawn_key=(stream,))
    return np.random.default_rng(seq)


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """Immutable, ordered collection of d-dimensional float32 vectors with string ids."""

    dim: int
    ids: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError(f"dim must be a positive integer, got {self.dim}")
        ids = tuple(self.ids)
        object.__setattr__(self, "ids", ids)
        for i in ids:
            if not isinstance(i, str) or not i:
                raise ValidationError(f"ids must be non-empty strings, got {i!r}")
            if "\n" in i:
                raise ValidationError(f"id {i!r} contains a newline (unrepresentable in EMBV1)")
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate ids in embedding set")
        vecs = np.array(self.vectors, dtype=np.float32, order="C")
        if vecs.shape != (len(ids), self.dim):
            raise ValidationError(
                f"vectors shape {vecs.shape} does not match ({len(ids)}, {self.dim})"
            )
        if not np.all(np.isfinite(vecs)):
            raise ValidationError("vectors contain NaN or Inf")
        vecs.flags.writeable = False
        object.__setattr__(self, "vectors", vecs)

    @cached_property
    def _row_of(self) -> dict[str, int]:
        return {i: row for row, i in enumerate(self.ids)}

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, id_: str) -> bool:
        return id_ in self._row_of

    def index_of(self, id_: str) -> int:
        try:
            return self._row_of[id_]
        except KeyError:
            raise ValidationError(f"unknown embedding id {id_!r}") from None

    def vector(self, id_: str) -> np.ndarray:
        return self.vectors[self.index_of(id_)]

    def rows(self, ids: Iterable[str]) -> np.ndarray:
        """Matrix of the given ids' vectors, in the order requested."""
        return self.vectors[[self.index_of(i) for i in ids]]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, EmbeddingSet)
            and self.dim == other.dim
            and self.ids == other.ids
            and np.array_equal(self.vectors, other.vectors)
        )


@dataclass(frozen=True)
class PairExample:
    """One labeled (anchor, candidate) pair; label 1 means a matching pair."""

    anchor_id: str
    candidate_id: str
    label: int

    def __post_init__(self):
        if not self.anchor_id or not self.candidate_id:
            raise ValidationError("pair ids must be non-empty strings")
        if self.label not in (0, 1):
            raise ValidationError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class PairDataset:
    """Labeled pair examples plus an optional raw-text corpus for BM25 runs."""

    examples: tuple[PairExample, ...]
    raw_texts: Mapping[str, str] | None = None

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))

    def __len__(self) -> int:
        return len(self.examples)

    def positives(self) -> tuple[PairExample, ...]:
        return tuple(ex for ex in self.examples if ex.label == 1)

    def validate_against(self, a_set: EmbeddingSet, b_set: EmbeddingSet) -> None:
        """Every anchor must resolve in the A set and every candidate in the B set."""
        for ex in self.examples:
            if ex.anchor_id not in a_set:
                raise ValidationError(f"anchor id {ex.anchor_id!r} not in modality-A set")
            if ex.candidate_id not in b_set:
                raise ValidationError(f"candidate id {ex.candidate_id!r} not in modality-B set")


def save_embeddings(emb: EmbeddingSet, path) -> None:
    """Write an EMBV1 file; load_embeddings reproduces the set bit-exactly."""
    if len(emb) == 0:
        raise ValidationError("cannot save an empty embedding set (EMBV1 forbids count=0)")
    id_block = "\n".join(emb.ids).encode("utf-8")
    header = _EMB_HEADER.pack(EMB_MAGIC, len(emb), emb.dim, len(id_block))
    payload = np.ascontiguousarray(emb.vectors, dtype="<f4").tobytes()
    Path(path).write_bytes(header + id_block + payload)


def load_embeddings(path) -> EmbeddingSet:
    """Read an EMBV1 file, validating the header, ids, and payload."""
    data = Path(path).read_bytes()
    if len(data) < _EMB_HEADER.size:
        raise FormatError(f"{path}: truncated EMBV1 header ({len(data)} bytes)")
    magic, count, dim, id_len = _EMB_HEADER.unpack_from(data)
    if magic != EMB_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if count == 0 or dim == 0:
        raise FormatError(f"{path}: count and dim must be nonzero (got {count}, {dim})")
    expected = _EMB_HEADER.size + id_len + 4 * count * dim
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    try:
        ids = data[_EMB_HEADER.size : _EMB_HEADER.size + id_len].decode("utf-8").split("\n")
    except UnicodeDecodeError as e:
        raise FormatError(f"{path}: id block is not valid UTF-8: {e}") from None
    if len(ids) != count:
        raise FormatError(f"{path}: header says {count} ids, id block holds {len(ids)}")
    vectors = np.frombuffer(data, dtype="<f4", offset=_EMB_HEADER.size + id_len)
    return EmbeddingSet(dim=dim, ids=tuple(ids), vectors=vectors.reshape(count, dim))


def save_pairs(dataset: PairDataset, path) -> None:
    """Write pair examples as JSON lines."""
    lines = [
        json.dumps(
            {"anchor_id": ex.anchor_id, "candidate_id": ex.candidate_id, "label": ex.label}
        )
        for ex in dataset.examples
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_pairs(path, raw_texts: Mapping[str, str] | None = None) -> PairDataset:
    """Read a JSON-lines pair dataset; optionally attach a raw-text corpus."""
    examples = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(f"{path}:{lineno}: invalid JSON: {e}") from None
        try:
            examples.append(
                PairExample(
                    anchor_id=obj["anchor_id"],
                    candidate_id=obj["candidate_id"],
                    label=obj["label"],
                )
            )
        except (KeyError, TypeError) as e:
            raise FormatError(f"{path}:{lineno}: missing or malformed field: {e}") from None
    return PairDataset(examples=tuple(examples), raw_texts=raw_texts)


def save_texts(texts: Mapping[str, str], path) -> None:
    """Write an id -> text corpus as JSON lines."""
    lines = [json.dumps({"id": i, "text": t}) for i, t in texts.items()]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_texts(path) -> dict[str, str]:
    """Read a JSON-lines id -> text corpus."""
    texts: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            id_, text = obj["id"], obj["text"]
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise FormatError(f"{path}:{lineno}: malformed corpus line: {e}") from None
        if id_ in texts:
            raise ValidationError(f"{path}:{lineno}: duplicate corpus id {id_!r}")
        texts[id_] = text
    return texts


def random_orthogonal(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random orthogonal matrix via QR of a Gaussian draw, sign-corrected.

    Fixing the signs of R's diagonal makes the result a deterministic
    function of the generator state (plain QR leaves per-column signs
    implementation-defined).
    """
    m = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(m)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def synthetic_rotation(dim: int, seed: int) -> np.ndarray:
    """The exact orthogonal map generate_synthetic uses for this seed and dim."""
    return random_orthogonal(dim, seeded_rng(seed, _STREAM_Q))


def _derangement(n: int, rng: np.random.Generator) -> np.ndarray:
    # Sattolo's algorithm: a uniform random n-cycle, hence fixed-point free.
    idx = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i))
        idx[i], idx[j] = idx[j], idx[i]
    return idx


def generate_synthetic(
    n_pairs: int, dim: int, noise_sigma: float, seed: int
) -> tuple[EmbeddingSet, EmbeddingSet, PairDataset]:
    """Deterministic synthetic corpus: A, its rotated-plus-noise twin B, and labeled pairs.

    Emits ``n_pairs`` positive examples (a_i, b_i) and ``n_pairs`` negatives
    (a_i, b_j) with j drawn from a seeded derangement, so no negative ever
    collides with its own positive.
    """
    if n_pairs < 2:
        raise ValidationError("n_pairs must be at least 2 (no negative partner exists otherwise)")
    if dim < 1:
        raise ValidationError(f"dim must be a positive integer, got {dim}")
    if noise_sigma < 0:
        raise ValidationError(f"noise_sigma must be non-negative, got {noise_sigma}")

    a = seeded_rng(seed, _STREAM_A).standard_normal((n_pairs, dim))
    norms = np.linalg.norm(a, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    a /= norms

    q = synthetic_rotation(dim, seed)
    b = a @ q.T
    if noise_sigma > 0:
        b = b + noise_sigma * seeded_rng(seed, _STREAM_NOISE).standard_normal((n_pairs, dim))

    a_ids = tuple(f"a{i}" for i in range(n_pairs))
    b_ids = tuple(f"b{i}" for i in range(n_pairs))
    a_set = EmbeddingSet(dim=dim, ids=a_ids, vectors=a.astype(np.float32))
    b_set = EmbeddingSet(dim=dim, ids=b_ids, vectors=b.astype(np.float32))

    neg = _derangement(n_pairs, seeded_rng(seed, _STREAM_NEG))
    examples = [PairExample(a_ids[i], b_ids[i], 1) for i in range(n_pairs)]
    examples += [PairExample(a_ids[i], b_ids[int(neg[i])], 0) for i in range(n_pairs)]
    return a_set, b_set, PairDataset(examples=tuple(examples))
