"""BM25 baseline: tokenizer, hand-computed scores, ranking oracle, properties."""

import math

import pytest

from modalign import ValidationError, bm25_retrieve, bm25_score, build_bm25_index, tokenize

TOY = {
    "D1": "the cat sat",
    "D2": "the dog ran",
    "D3": "cat and dog",
}


def reference_score(texts, query, doc_id, k1=1.5, b=0.75):
    """Independent scoring transliteration used as the test oracle."""
    docs = {i: [t for t in _simple_tokens(x)] for i, x in texts.items()}
    n = len(docs)
    avgdl = sum(len(t) for t in docs.values()) / n
    doc = docs[doc_id]
    score = 0.0
    for term in _simple_tokens(query):
        tf = doc.count(term)
        if tf == 0:
            continue
        df = sum(1 for t in docs.values() if term in t)
        idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
        score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len(doc) / avgdl))
    return score


def _simple_tokens(text):
    out, cur = [], []
    for ch in text.lower():
        if ch.isalnum():
            cur.append(ch)
        elif cur:
            out.append("".join(cur))
            cur = []
    if cur:
        out.append("".join(cur))
    return out


class TestTokenize:
    def test_basic_sentence(self):
        assert tokenize("The cat, sat!") == ["the", "cat", "sat"]

    def test_empty(self):
        assert tokenize("") == []

    def test_digits_retained(self):
        assert tokenize("x2 = x2") == ["x2", "x2"]

    def test_underscore_splits(self):
        assert tokenize("foo_bar") == ["foo", "bar"]

    def test_unicode_letters(self):
        assert tokenize("Élan and café!") == ["élan", "and", "café"]

    def test_only_punctuation(self):
        assert tokenize("... !!! ???") == []


class TestScoring:
    def test_hand_check_ln_1_6(self):
        # dl = avgdl = 3 makes the length factor 1 and tf*(k1+1)/(tf+k1) = 1,
        # leaving idf = ln(1 + 1.5/2.5) = ln(1.6)
        index = build_bm25_index(TOY)
        score = bm25_score(index, ["cat"], "D1")
        assert score == pytest.approx(math.log(1.6), abs=1e-6)
        assert score == pytest.approx(0.4700, abs=5e-5)

    def test_absent_term_contributes_zero(self):
        index = build_bm25_index(TOY)
        assert bm25_score(index, ["zebra"], "D1") == 0.0
        assert bm25_score(index, ["cat", "zebra"], "D1") == bm25_score(index, ["cat"], "D1")

    def test_empty_query_scores_zero_everywhere(self):
        index = build_bm25_index(TOY)
        for doc_id in TOY:
            assert bm25_score(index, [], doc_id) == 0.0

    def test_unknown_doc_rejected(self):
        index = build_bm25_index(TOY)
        with pytest.raises(ValidationError, match="unknown"):
            bm25_score(index, ["cat"], "D9")

    def test_matches_reference_oracle(self):
        index = build_bm25_index(TOY)
        for doc_id in TOY:
            for q in ("cat", "cat dog", "the dog ran", "dog dog"):
                got = bm25_score(index, tokenize(q), doc_id)
                want = reference_score(TOY, q, doc_id)
                assert got == pytest.approx(want, rel=1e-12, abs=1e-15)

    def test_non_negative_scores(self):
        # plus-one idf keeps scores >= 0 even for terms in most documents
        texts = {f"d{i}": "common words everywhere" + (" rare" if i == 0 else "") for i in range(10)}
        index = build_bm25_index(texts)
        for doc_id in texts:
            assert bm25_score(index, ["common", "words", "rare"], doc_id) >= 0.0

    def test_tf_monotonicity_at_fixed_length(self):
        texts = {
            "one": "cat pad pad pad",
            "two": "cat cat pad pad",
            "three": "cat cat cat pad",
        }
        index = build_bm25_index(texts)
        scores = [bm25_score(index, ["cat"], d) for d in ("one", "two", "three")]
        assert scores[0] <= scores[1] <= scores[2]

    def test_corpus_duplication_preserves_ranking(self):
        base = {"a": "cat sat here", "b": "dog sat there", "c": "cat cat dog"}
        doubled = dict(base)
        doubled.update({f"{k}_copy": v for k, v in base.items()})
        i1 = build_bm25_index(base)
        i2 = build_bm25_index(doubled)
        for query in ("cat", "dog sat", "cat dog"):
            tokens = tokenize(query)
            rank1 = sorted(base, key=lambda d: -bm25_score(i1, tokens, d))
            rank2 = sorted(base, key=lambda d: -bm25_score(i2, tokens, d))
            assert rank1 == rank2


class TestRetrieve:
    def test_single_doc_corpus(self):
        index = build_bm25_index({"only": "hello world"})
        result = bm25_retrieve(index, "hello", k=1)
        assert result.top()[0] == "only"

    def test_cat_dog_ranks_d3_first(self):
        index = build_bm25_index(TOY)
        result = bm25_retrieve(index, "cat dog", k=3)
        assert result.ids[0] == "D3"
        assert len(result.items) == 3

    def test_ordering_matches_brute_force(self):
        import random

        rnd = random.Random(6)
        vocab = ["cat", "dog", "bird", "fish", "runs", "sits", "x9"]
        for _ in range(20):
            texts = {
                f"d{i}": " ".join(rnd.choices(vocab, k=rnd.randint(1, 8)))
                for i in range(rnd.randint(2, 12))
            }
            index = build_bm25_index(texts)
            query = " ".join(rnd.choices(vocab, k=rnd.randint(1, 3)))
            got = bm25_retrieve(index, query, k=len(texts)).ids
            scored = [(d, reference_score(texts, query, d)) for d in texts]
            order = sorted(range(len(scored)), key=lambda i: (-scored[i][1], i))
            want = tuple(scored[i][0] for i in order)
            assert got == want

    def test_k_validation(self):
        index = build_bm25_index(TOY)
        with pytest.raises(ValidationError):
            bm25_retrieve(index, "cat", k=4)
        with pytest.raises(ValidationError):
            bm25_retrieve(index, "cat", k=0)

    def test_tie_break_is_corpus_order(self):
        index = build_bm25_index({"z_first": "same text", "a_second": "same text"})
        result = bm25_retrieve(index, "same", k=2)
        assert result.ids == ("z_first", "a_second")


class TestBuildIndex:
    def test_empty_corpus_rejected(self):
        with pytest.raises(ValidationError, match="empty"):
            build_bm25_index({})

    def test_stats(self):
        index = build_bm25_index(TOY)
        assert index.n_docs == 3
        assert index.avgdl == 3.0
        assert index.df["cat"] == 2
        assert index.df["the"] == 2
        assert index.doc_lengths["D1"] == 3
        assert all(v <= index.n_docs for v in index.df.values())

    def test_bad_parameters(self):
        with pytest.raises(ValidationError):
            build_bm25_index(TOY, k1=-1.0)
        with pytest.raises(ValidationError):
            build_bm25_index(TOY, b=1.5)
