"""Wires the corpus, indexes, providers and agent into one QA engine.

The engine is loaded immutable from the artifacts the CLI builds (chunks file,
persisted vector collection) and answers questions in two modes: enhanced
(hybrid retrieval + single generation pass) and agentic (per-document tools
driven by the reasoning loop).
"""

from __future__ import annotations

from dataclasses import dataclass

from .agent import AgentConfig, AgentTrace, Tool, ToolRegistry, register_tool, run_agent
from .answer import Answer, Mode, answer_question
from .bm25 import bm25_build
from .config import AppConfig
from .corpus import Chunk, CompositeElement, TableElement, load_chunks
from .errors import NotFoundError, StorageError, ValidationError
from .providers import (
    EmbeddingProvider,
    LanguageProvider,
    MockEmbeddingProvider,
    RemoteEmbeddingProvider,
    RemoteLanguageProvider,
    ScriptedLanguageProvider,
)
from .retrieve import EnsembleConfig, RetrievalIndexes, retrieve_context
from .vectorstore import VectorCollection, build_collection, open_collection


def build_embedding_provider(cfg: AppConfig) -> EmbeddingProvider:
    p = cfg.providers
    if p.embedding == "remote":
        return RemoteEmbeddingProvider(
            endpoint=p.embedding_endpoint,
            dimension=p.embedding_dimension,
            model=p.embedding_model,
            api_key_env=p.api_key_env,
        )
    return MockEmbeddingProvider(dimension=p.embedding_dimension)


def build_language_provider(cfg: AppConfig) -> LanguageProvider:
    p = cfg.providers
    if p.llm == "remote":
        return RemoteLanguageProvider(
            endpoint=p.llm_endpoint, model=p.llm_model, api_key_env=p.api_key_env
        )
    if p.llm_script is not None:
        return ScriptedLanguageProvider.from_file(p.llm_script)
    return ScriptedLanguageProvider(default=p.llm_default_response)


def ensemble_config(cfg: AppConfig) -> EnsembleConfig:
    r = cfg.retrieval
    return EnsembleConfig(
        dense_k=r.dense_k,
        sparse_k=r.sparse_k,
        dense_weight=r.dense_weight,
        sparse_weight=r.sparse_weight,
        rrf_constant=r.rrf_constant,
        expansion_count=r.expansion_count,
        final_top_n=r.final_top_n,
    )


@dataclass
class SourceView:
    """Full chunk payload for the citation-inspection surface."""

    chunk_id: str
    filename: str
    text: str
    page: int | None = None
    html: str | None = None


def _tool_description(filename: str, chunks: list[Chunk]) -> str:
    titles = []
    for chunk in chunks:
        if isinstance(chunk, CompositeElement):
            first_line = chunk.text.splitlines()[0] if chunk.text else ""
            if first_line:
                titles.append(first_line)
        if len(titles) == 3:
            break
    topics = "; ".join(titles) if titles else "untitled content"
    return f"Guideline document '{filename}' ({len(chunks)} chunks). Topics: {topics}"


class QaEngine:
    def __init__(
        self,
        chunks: list[Chunk],
        collection: VectorCollection,
        embedder: EmbeddingProvider,
        llm: LanguageProvider,
        retrieval: EnsembleConfig | None = None,
        agent: AgentConfig | None = None,
    ):
        self.chunks = {c.element_id: c for c in chunks}
        self.chunk_list = list(chunks)
        self.embedder = embedder
        self.llm = llm
        self.retrieval_config = retrieval or EnsembleConfig()
        self.agent_config = agent or AgentConfig()
        self.indexes = RetrievalIndexes(
            collection=collection,
            bm25=bm25_build(self.chunk_list),
            chunks=self.chunks,
            embedder=embedder,
        )
        self.registry = self._build_registry()

    @classmethod
    def from_config(cls, cfg: AppConfig) -> "QaEngine":
        chunks_path = cfg.storage.chunks_path
        if not chunks_path.is_file():
            raise StorageError(
                f"chunks file not found: {chunks_path} (run the chunk command first)"
            )
        with chunks_path.open("rb") as handle:
            chunks = load_chunks(handle)
        collection_dir = cfg.storage.collection_root / cfg.storage.collection_name
        collection = open_collection(collection_dir)
        return cls(
            chunks=chunks,
            collection=collection,
            embedder=build_embedding_provider(cfg),
            llm=build_language_provider(cfg),
            retrieval=ensemble_config(cfg),
            agent=AgentConfig(
                max_steps=cfg.agent.max_steps, tool_timeout_s=cfg.agent.tool_timeout_s
            ),
        )

    # -- agent tooling -------------------------------------------------------

    def _scoped_pipeline(self, chunks: list[Chunk]):
        records = [r for r in self.indexes.collection.records() if r.chunk_id in
                   {c.element_id for c in chunks}]
        sub_collection = build_collection(
            f"{self.indexes.collection.name}-scope", self.indexes.collection.dimension, records
        )
        sub_indexes = RetrievalIndexes(
            collection=sub_collection,
            bm25=bm25_build(chunks),
            chunks={c.element_id: c for c in chunks},
            embedder=self.embedder,
        )

        def pipeline(query: str) -> Answer:
            bundle = retrieve_context(query, sub_indexes, self.retrieval_config, self.llm)
            return answer_question(query, bundle, self.llm, mode=Mode.ENHANCED)

        return pipeline

    def _build_registry(self) -> ToolRegistry:
        by_file: dict[str, list[Chunk]] = {}
        for chunk in self.chunk_list:
            by_file.setdefault(chunk.metadata.filename, []).append(chunk)
        registry = ToolRegistry()
        for filename, chunks in by_file.items():
            stem = filename.rsplit(".", 1)[0]
            register_tool(
                registry,
                Tool(
                    tool_id=stem,
                    description=_tool_description(filename, chunks),
                    pipeline=self._scoped_pipeline(chunks),
                ),
            )
        return registry

    # -- question answering ---------------------------------------------------

    def ask_enhanced(self, question: str) -> Answer:
        bundle = retrieve_context(question, self.indexes, self.retrieval_config, self.llm)
        return answer_question(question, bundle, self.llm, mode=Mode.ENHANCED)

    def ask_agentic(self, question: str) -> tuple[Answer, AgentTrace]:
        if len(self.registry) == 0:
            raise ValidationError("agentic mode needs a non-empty corpus")
        return run_agent(question, self.registry, self.llm, self.agent_config)

    def get_source(self, chunk_id: str) -> SourceView:
        chunk = self.chunks.get(chunk_id)
        if chunk is None:
            raise NotFoundError(f"unknown chunk {chunk_id!r}")
        if isinstance(chunk, TableElement):
            return SourceView(
                chunk_id=chunk.element_id,
                filename=chunk.metadata.filename,
                page=chunk.metadata.page,
                text=chunk.content,
                html=chunk.html,
            )
        return SourceView(
            chunk_id=chunk.element_id,
            filename=chunk.metadata.filename,
            page=chunk.metadata.page,
            text=chunk.text,
            html=None,
        )
