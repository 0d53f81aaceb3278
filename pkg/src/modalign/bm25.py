"""Okapi BM25 lexical retrieval baseline.

Scoring uses the classic saturation/length-normalization form with the
non-negative idf variant:

    score(q, D) = sum_t idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl/avgdl))
    idf(t)      = ln(1 + (N - df + 0.5) / (df + 0.5))

The raw Robertson idf goes negative once df > N/2, which corrupts
short-query rankings, so only the plus-one variant is offered.  The
tokenizer is deliberately naive (lowercase, split on any non-alphanumeric
codepoint, no stemming or stopwords): the baseline's weakness on
cross-modal text is exactly what it is here to demonstrate.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Mapping

from .errors import ValidationError
from .retrieval import RetrievalResult

# maximal runs of unicode letters/digits (\w minus underscore)
_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric codepoint; drop empties."""
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class Bm25Index:
    """Per-document term statistics plus the corpus-level df table."""

    doc_ids: tuple[str, ...]
    documents: dict[str, Counter]   # id -> term multiset
    doc_lengths: dict[str, int]     # id -> token count
    avgdl: float
    df: dict[str, int]              # term -> number of docs containing it
    n_docs: int
    k1: float = 1.5
    b: float = 0.75

    def __len__(self) -> int:
        return self.n_docs


def build_bm25_index(texts: Mapping[str, str], k1: float = 1.5, b: float = 0.75) -> Bm25Index:
    """Tokenize and index a corpus; document order fixes the tie-break order."""
    if not texts:
        raise ValidationError("cannot build a BM25 index over an empty corpus")
    if k1 < 0 or not 0 <= b <= 1:
        raise ValidationError(f"need k1 >= 0 and 0 <= b <= 1, got k1={k1}, b={b}")
    documents: dict[str, Counter] = {}
    doc_lengths: dict[str, int] = {}
    df: dict[str, int] = {}
    for doc_id, text in texts.items():
        tokens = tokenize(text)
        counts = Counter(tokens)
        documents[doc_id] = counts
        doc_lengths[doc_id] = len(tokens)
        for term in counts:
            df[term] = df.get(term, 0) + 1
    n = len(documents)
    return Bm25Index(
        doc_ids=tuple(documents),
        documents=documents,
        doc_lengths=doc_lengths,
        avgdl=sum(doc_lengths.values()) / n,
        df=df,
        n_docs=n,
        k1=k1,
        b=b,
    )


def bm25_score(index: Bm25Index, query_tokens: list[str], doc_id: str) -> float:
    """Score one document against a token list (repeated tokens count again)."""
    if doc_id not in index.documents:
        raise ValidationError(f"unknown document id {doc_id!r}")
    counts = index.documents[doc_id]
    dl = index.doc_lengths[doc_id]
    score = 0.0
    for term in query_tokens:
        tf = counts.get(term, 0)
        if tf == 0:
            continue
        d_f = index.df[term]
        idf = math.log1p((index.n_docs - d_f + 0.5) / (d_f + 0.5))
        norm = index.k1 * (1.0 - index.b + index.b * dl / index.avgdl)
        score += idf * tf * (index.k1 + 1.0) / (tf + norm)
    return score


def bm25_retrieve(index: Bm25Index, query_text: str, k: int) -> RetrievalResult:
    """Top-k documents by descending score, ties broken by corpus order."""
    if not 1 <= k <= index.n_docs:
        raise ValidationError(f"k must be in [1, {index.n_docs}], got {k}")
    tokens = tokenize(query_text)
    scored = [(doc_id, bm25_score(index, tokens, doc_id)) for doc_id in index.doc_ids]
    # stable sort on negated score keeps corpus order among ties
    ranked = sorted(scored, key=lambda pair: -pair[1])
    return RetrievalResult(items=tuple(ranked[:k]), metric="bm25")
