"""TOML configuration shared by the CLI and the HTTP service.

Relative paths in the file are resolved against the config file's directory,
so commands behave the same from any working directory.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .providers import DEFAULT_API_KEY_ENV, DEFAULT_EMBEDDING_MODEL, DEFAULT_LLM_MODEL


@dataclass
class ProvidersConfig:
    llm: str = "mock"  # "mock" | "remote"
    embedding: str = "mock"
    llm_script: Path | None = None
    llm_default_response: str = ""
    llm_endpoint: str = ""
    llm_model: str = DEFAULT_LLM_MODEL
    embedding_endpoint: str = ""
    embedding_model: str = DEFAULT_EMBEDDING_MODEL
    embedding_dimension: int = 64
    api_key_env: str = DEFAULT_API_KEY_ENV


@dataclass
class RetrievalConfig:
    dense_k: int = 6
    sparse_k: int = 2
    dense_weight: float = 0.5
    sparse_weight: float = 0.5
    rrf_constant: float = 60.0
    expansion_count: int = 3
    final_top_n: int = 8


@dataclass
class AgentSettings:
    max_steps: int = 8
    tool_timeout_s: float = 60.0


@dataclass
class CorpusConfig:
    separator: str = "\n\n"
    drop_kinds: list[str] = field(default_factory=list)
    delimiter_pairs: list[tuple[str, str]] = field(default_factory=list)
    enrich_tables: bool = False


@dataclass
class StorageConfig:
    chunks_path: Path = Path("work/chunks.json")
    collection_root: Path = Path("work/collections")
    collection_name: str = "guide_chunks"
    state_dir: Path = Path("work/state")
    report_dir: Path = Path("work/reports")


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    auth_token_env: str = "GUIDEQA_TOKEN"
    static_dir: Path | None = None


@dataclass
class AppConfig:
    providers: ProvidersConfig = field(default_factory=ProvidersConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    agent: AgentSettings = field(default_factory=AgentSettings)
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    storage: StorageConfig = field(default_factory=StorageConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)


def _section(raw: dict, name: str) -> dict:
    value = raw.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"config section [{name}] must be a table")
    return value


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else (base / path)


def load_config(path: str | Path) -> AppConfig:
    """Parse the config file; missing file and bad values raise ConfigError."""
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"config file not found: {config_path}")
    try:
        raw = tomllib.loads(config_path.read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config file {config_path}: {exc}") from exc
    base = config_path.resolve().parent

    p = _section(raw, "providers")
    providers = ProvidersConfig(
        llm=p.get("llm", "mock"),
        embedding=p.get("embedding", "mock"),
        llm_script=_resolve(base, p["llm_script"]) if "llm_script" in p else None,
        llm_default_response=p.get("llm_default_response", ""),
        llm_endpoint=p.get("llm_endpoint", ""),
        llm_model=p.get("llm_model", DEFAULT_LLM_MODEL),
        embedding_endpoint=p.get("embedding_endpoint", ""),
        embedding_model=p.get("embedding_model", DEFAULT_EMBEDDING_MODEL),
        embedding_dimension=int(p.get("embedding_dimension", 64)),
        api_key_env=p.get("api_key_env", DEFAULT_API_KEY_ENV),
    )
    if providers.llm not in ("mock", "remote"):
        raise ConfigError(f"providers.llm must be 'mock' or 'remote', got {providers.llm!r}")
    if providers.embedding not in ("mock", "remote"):
        raise ConfigError(
            f"providers.embedding must be 'mock' or 'remote', got {providers.embedding!r}"
        )

    r = _section(raw, "retrieval")
    retrieval = RetrievalConfig(
        dense_k=int(r.get("dense_k", 6)),
        sparse_k=int(r.get("sparse_k", 2)),
        dense_weight=float(r.get("dense_weight", 0.5)),
        sparse_weight=float(r.get("sparse_weight", 0.5)),
        rrf_constant=float(r.get("rrf_constant", 60.0)),
        expansion_count=int(r.get("expansion_count", 3)),
        final_top_n=int(r.get("final_top_n", 8)),
    )

    a = _section(raw, "agent")
    agent = AgentSettings(
        max_steps=int(a.get("max_steps", 8)),
        tool_timeout_s=float(a.get("tool_timeout_s", 60.0)),
    )

    c = _section(raw, "corpus")
    pairs = []
    for pair in c.get("delimiter_pairs", []):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError("corpus.delimiter_pairs entries must be [start, end] arrays")
        pairs.append((pair[0], pair[1]))
    corpus_cfg = CorpusConfig(
        separator=c.get("separator", "\n\n"),
        drop_kinds=list(c.get("drop_kinds", [])),
        delimiter_pairs=pairs,
        enrich_tables=bool(c.get("enrich_tables", False)),
    )

    s = _section(raw, "storage")
    storage = StorageConfig(
        chunks_path=_resolve(base, s.get("chunks_path", "work/chunks.json")),
        collection_root=_resolve(base, s.get("collection_root", "work/collections")),
        collection_name=s.get("collection_name", "guide_chunks"),
        state_dir=_resolve(base, s.get("state_dir", "work/state")),
        report_dir=_resolve(base, s.get("report_dir", "work/reports")),
    )

    v = _section(raw, "service")
    service = ServiceConfig(
        host=v.get("host", "127.0.0.1"),
        port=int(v.get("port", 8080)),
        auth_token_env=v.get("auth_token_env", "GUIDEQA_TOKEN"),
        static_dir=_resolve(base, v["static_dir"]) if "static_dir" in v else None,
    )

    return AppConfig(
        providers=providers,
        retrieval=retrieval,
        agent=agent,
        corpus=corpus_cfg,
        storage=storage,
        service=service,
    )
