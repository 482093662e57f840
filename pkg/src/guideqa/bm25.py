"""Okapi BM25 sparse index over chunk texts.

score(q, d) = sum over query tokens t of
    IDF(t) * tf(t,d) * (k1 + 1) / (tf(t,d) + k1 * (1 - b + b * |d| / avgdl))
with IDF(t) = ln((N - df(t) + 0.5) / (df(t) + 0.5) + 1), which keeps every
score non-negative. Query tokens are iterated with multiplicity. Tokenization
is Unicode lowercasing split on non-alphanumeric codepoints; no stemming and
no stopwords, since the corpus mixes French and Arabic.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field

from .corpus import Chunk, retrieval_text
from .errors import QueryError, ValidationError
from .retrieve import Provenance, RetrievalResult

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.5
    b: float = 0.75

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValidationError(f"k1 must be positive, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValidationError(f"b must lie in [0, 1], got {self.b}")


@dataclass
class Bm25Index:
    doc_ids: list[str]
    term_frequencies: list[dict[str, int]]
    document_lengths: list[int]
    avgdl: float
    df: dict[str, int]
    params: Bm25Params = field(default_factory=Bm25Params)

    def idf(self, term: str) -> float:
        n_docs = len(self.doc_ids)
        d = self.df.get(term, 0)
        return math.log((n_docs - d + 0.5) / (d + 0.5) + 1.0)

    def score(self, query_tokens: list[str], doc_index: int) -> float:
        tf = self.term_frequencies[doc_index]
        dl = self.document_lengths[doc_index]
        k1, b = self.params.k1, self.params.b
        total = 0.0
        for token in query_tokens:
            freq = tf.get(token, 0)
            if freq == 0:
                continue
            denom = freq + k1 * (1.0 - b + b * dl / self.avgdl)
            total += self.idf(token) * freq * (k1 + 1.0) / denom
        return total

    def search(self, query: str, k: int) -> list[RetrievalResult]:
        """Top-k positive-score documents; ties broken by ascending doc id."""
        if k < 1:
            raise ValidationError("k must be >= 1")
        tokens = tokenize(query)
        if not tokens:
            raise QueryError(f"query {query!r} is empty after tokenization")
        scored = []
        for i in range(len(self.doc_ids)):
            s = self.score(tokens, i)
            if s > 0.0:
                scored.append((s, self.doc_ids[i]))
        scored.sort(key=lambda pair: (-pair[0], pair[1]))
        return [
            RetrievalResult(
                chunk_id=doc_id,
                score=s,
                provenance=Provenance.SPARSE,
                source_query=query,
            )
            for s, doc_id in scored[:k]
        ]


def bm25_build_texts(docs: list[tuple[str, str]], params: Bm25Params | None = None) -> Bm25Index:
    """Build an index from (doc_id, text) pairs."""
    params = params or Bm25Params()
    doc_ids = [doc_id for doc_id, _ in docs]
    tokenized = [tokenize(text) for _, text in docs]
    term_frequencies = [dict(Counter(tokens)) for tokens in tokenized]
    document_lengths = [len(tokens) for tokens in tokenized]
    avgdl = sum(document_lengths) / len(docs) if docs else 0.0
    df: dict[str, int] = {}
    for tf in term_frequencies:
        for term in tf:
            df[term] = df.get(term, 0) + 1
    return Bm25Index(
        doc_ids=doc_ids,
        term_frequencies=term_frequencies,
        document_lengths=document_lengths,
        avgdl=avgdl,
        df=df,
        params=params,
    )


def bm25_build(chunks: list[Chunk], params: Bm25Params | None = None) -> Bm25Index:
    """Index chunks by the same retrieval text the dense side embeds."""
    return bm25_build_texts(
        [(chunk.element_id, retrieval_text(chunk)) for chunk in chunks], params
    )


def bm25_search(index: Bm25Index, query: str, k: int) -> list[RetrievalResult]:
    return index.search(query, k)
