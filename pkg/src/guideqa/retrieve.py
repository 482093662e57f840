"""Hybrid retrieval: query expansion, weighted reciprocal-rank fusion, context assembly.

Dense and sparse retrievers return incomparable score scales, so ranked lists
are merged by rank alone: fused(d) = sum over lists containing d of
w / (c + rank(d)), rank starting at 1.
"""

from __future__ import annotations

import math
import re
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Mapping, Sequence

from .answer import ContextBlock, ContextBundle, TableContext
from .corpus import Chunk, OperationReport, TableElement
from .errors import ExpansionError, QueryError, ValidationError
from .providers import EmbeddingKind, EmbeddingProvider, LanguageProvider

if TYPE_CHECKING:
    from .bm25 import Bm25Index
    from .vectorstore import VectorCollection


class Provenance(str, Enum):
    DENSE = "dense"
    SPARSE = "sparse"
    FUSED = "fused"


@dataclass(frozen=True)
class RetrievalResult:
    chunk_id: str
    score: float
    provenance: Provenance
    source_query: str = ""

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValidationError(f"retrieval score must be finite, got {self.score}")


@dataclass(frozen=True)
class EnsembleConfig:
    """Budgets and weights for the hybrid retriever.

    Defaults mirror the per-retriever budgets the product tunes for: six dense
    hits, two sparse hits, equal weights, and a final context of eight chunks.
    """

    dense_k: int = 6
    sparse_k: int = 2
    dense_weight: float = 0.5
    sparse_weight: float = 0.5
    rrf_constant: float = 60.0
    expansion_count: int = 3
    final_top_n: int = 8

    def __post_init__(self):
        if self.dense_k < 1 or self.sparse_k < 1 or self.final_top_n < 1:
            raise ValidationError("dense_k, sparse_k and final_top_n must be >= 1")
        if self.expansion_count < 0:
            raise ValidationError("expansion_count cannot be negative")
        if self.dense_weight < 0 or self.sparse_weight < 0:
            raise ValidationError("retriever weights cannot be negative")
        if self.dense_weight + self.sparse_weight <= 0:
            raise ValidationError("at least one retriever weight must be positive")
        if self.rrf_constant < 0:
            raise ValidationError("rrf_constant cannot be negative")


EXPANSION_SYSTEM = (
    "You reformulate search queries for a vaccination-guideline retrieval system."
)
EXPANSION_TEMPLATE = (
    "Produce {n} alternative phrasings of the question below, one per line, in "
    "the same language as the input. Output only the phrasings.\n\n"
    "Question: {question}"
)

_NUMBERING_RE = re.compile(r"^\s*(?:\d+\s*[.)]\s*|[-*]\s+)")


def expand_query(question: str, llm: LanguageProvider, n: int) -> list[str]:
    """The original question followed by up to n distinct model reformulations."""
    if not question.strip():
        raise ValidationError("question must be non-empty")
    if n < 1:
        raise ValidationError("expansion count must be >= 1")
    try:
        raw = llm.generate(EXPANSION_SYSTEM, EXPANSION_TEMPLATE.format(n=n, question=question))
    except Exception as exc:
        raise ExpansionError(f"query expansion failed: {exc}") from exc

    queries = [question]
    seen = {question.strip().lower()}
    for line in raw.splitlines():
        candidate = _NUMBERING_RE.sub("", line).strip()
        if not candidate:
            continue
        key = candidate.lower()
        if key in seen:
            continue
        seen.add(key)
        queries.append(candidate)
        if len(queries) == n + 1:
            break
    return queries


def fuse(
    ranked_lists: Sequence[tuple[float, Sequence[RetrievalResult]]],
    c: float = 60.0,
) -> list[RetrievalResult]:
    """Weighted reciprocal-rank fusion over strictly rank-ordered lists.

    Depends only on ranks, never on input scores; ties in the fused score are
    broken by ascending chunk_id so every ranking is reproducible.
    """
    scores: dict[str, float] = defaultdict(float)
    for weight, results in ranked_lists:
        if weight < 0:
            raise ValidationError("fusion weights cannot be negative")
        for rank, result in enumerate(results, start=1):
            scores[result.chunk_id] += weight / (c + rank)
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return [
        RetrievalResult(chunk_id=cid, score=s, provenance=Provenance.FUSED)
        for cid, s in ordered
    ]


@dataclass
class RetrievalIndexes:
    """Everything retrieve_context searches, built over one chunk set."""

    collection: "VectorCollection"
    bm25: "Bm25Index"
    chunks: Mapping[str, Chunk]
    embedder: EmbeddingProvider


def retrieve_context(
    question: str,
    indexes: RetrievalIndexes,
    config: EnsembleConfig,
    llm: LanguageProvider,
    report: OperationReport | None = None,
) -> ContextBundle:
    """Run the hybrid retriever for a question and assemble its context bundle.

    Each expanded query contributes one dense and one sparse ranked list; all
    lists go through a single global fusion pass. Expansion failures degrade to
    the original question, never to a retrieval failure.
    """
    queries = [question]
    if config.expansion_count >= 1:
        try:
            queries = expand_query(question, llm, config.expansion_count)
        except ExpansionError as exc:
            if report is not None:
                report.add(f"query expansion degraded to the original question: {exc}")

    ranked_lists: list[tuple[float, Sequence[RetrievalResult]]] = []
    for q in queries:
        query_vector = indexes.embedder.embed([q], kind=EmbeddingKind.QUERY)[0]
        ranked_lists.append(
            (config.dense_weight, indexes.collection.search(query_vector, config.dense_k, source_query=q))
        )
        try:
            sparse = indexes.bm25.search(q, config.sparse_k)
        except QueryError as exc:
            if report is not None:
                report.add(f"sparse retrieval skipped for {q!r}: {exc}")
            continue
        ranked_lists.append((config.sparse_weight, sparse))

    fused = fuse(ranked_lists, config.rrf_constant)[: config.final_top_n]

    blocks: list[ContextBlock] = []
    tables: list[TableContext] = []
    for result in fused:
        chunk = indexes.chunks.get(result.chunk_id)
        if chunk is None:
            if report is not None:
                report.add(f"retrieved chunk {result.chunk_id!r} is missing from the chunk store")
            continue
        meta = chunk.metadata
        text = chunk.content if isinstance(chunk, TableElement) else chunk.text
        blocks.append(
            ContextBlock(chunk_id=chunk.element_id, filename=meta.filename, page=meta.page, text=text)
        )
        if isinstance(chunk, TableElement):
            tables.append(TableContext(chunk_id=chunk.element_id, html=chunk.html))
    return ContextBundle(chunks=tuple(blocks), tables=tuple(tables), question=question)
