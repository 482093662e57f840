"""Command-line interface: ingest, chunk, index, ask, bench-gen, eval, serve.

Every command reads one TOML config file (``--config``, default
./guideqa.toml). Exit codes: 0 success, 1 validation/configuration error,
2 pipeline error.
"""

from __future__ import annotations

import json
import sys
from collections import Counter
from pathlib import Path

import click

from . import benchmark as benchmark_mod
from . import evaluation
from .agent import trace_to_json
from .config import AppConfig, load_config
from .corpus import (
    CleaningSpec,
    OperationReport,
    TableElement,
    chunk_by_title,
    clean_elements,
    enrich_table,
    load_chunks,
    load_elements,
    save_chunks,
)
from .engine import QaEngine, build_embedding_provider, build_language_provider
from .errors import (
    ConfigError,
    EnrichmentError,
    GuideQaError,
    SchemaError,
    ValidationError,
)
from .figures import render_report_figures
from .service import run_service
from .vectorstore import build_collection, embed_chunks, persist_collection

EXIT_VALIDATION = 1
EXIT_PIPELINE = 2


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    if isinstance(exc, (ConfigError, ValidationError, SchemaError, click.ClickException)):
        sys.exit(EXIT_VALIDATION)
    sys.exit(EXIT_PIPELINE)


def _load_config(path: str) -> AppConfig:
    try:
        return load_config(path)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)


def _cleaning_spec(cfg: AppConfig) -> CleaningSpec:
    return CleaningSpec(
        delimiter_pairs=tuple(cfg.corpus.delimiter_pairs),
        drop_kinds=frozenset(cfg.corpus.drop_kinds),
    )


def _require_files(paths: tuple[str, ...] | list[str]) -> None:
    for path in paths:
        if not Path(path).is_file():
            click.echo(f"error: input file not found: {path}", err=True)
            sys.exit(EXIT_VALIDATION)


@click.group()
@click.option(
    "--config",
    "config_path",
    default="guideqa.toml",
    show_default=True,
    help="Path to the TOML configuration file.",
)
@click.pass_context
def main(ctx: click.Context, config_path: str) -> None:
    """Retrieval-augmented QA over guideline corpora."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path


@main.command()
@click.argument("sources", nargs=-1, required=True)
@click.pass_context
def ingest(ctx: click.Context, sources: tuple[str, ...]) -> None:
    """Validate element JSON files and summarize their structure."""
    _load_config(ctx.obj["config_path"])  # fail fast on a bad config
    _require_files(sources)
    try:
        for source in sources:
            with open(source, "rb") as handle:
                elements = load_elements(handle)
            kinds = Counter(el.kind for el in elements)
            summary = ", ".join(f"{kind}={count}" for kind, count in sorted(kinds.items()))
            click.echo(f"{source}: {len(elements)} elements ({summary})")
    except GuideQaError as exc:
        _fail(exc)


@main.command()
@click.argument("sources", nargs=-1, required=True)
@click.option("--out", "out_path", default=None, help="Chunks file to write (default from config).")
@click.pass_context
def chunk(ctx: click.Context, sources: tuple[str, ...], out_path: str | None) -> None:
    """Load, clean and chunk element files into the chunks file."""
    cfg = _load_config(ctx.obj["config_path"])
    _require_files(sources)
    target = Path(out_path) if out_path else cfg.storage.chunks_path
    spec = _cleaning_spec(cfg)
    llm = build_language_provider(cfg) if cfg.corpus.enrich_tables else None
    try:
        chunks = []
        for source in sources:
            with open(source, "rb") as handle:
                elements = load_elements(handle)
            chunks.extend(chunk_by_title(clean_elements(elements, spec), cfg.corpus.separator))
        if llm is not None:
            enriched = []
            for item in chunks:
                if isinstance(item, TableElement):
                    try:
                        item = enrich_table(item, llm)
                    except EnrichmentError as exc:
                        click.echo(f"warning: {exc}", err=True)
                enriched.append(item)
            chunks = enriched
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("wb") as handle:
            save_chunks(chunks, handle)
    except GuideQaError as exc:
        _fail(exc)
    click.echo(f"wrote {len(chunks)} chunks to {target}")


@main.command()
@click.option("--chunks", "chunks_path", default=None, help="Chunks file (default from config).")
@click.pass_context
def index(ctx: click.Context, chunks_path: str | None) -> None:
    """Embed the chunks and persist the vector collection."""
    cfg = _load_config(ctx.obj["config_path"])
    source = Path(chunks_path) if chunks_path else cfg.storage.chunks_path
    try:
        with source.open("rb") as handle:
            chunks = load_chunks(handle)
    except OSError as exc:
        _fail(ValidationError(f"cannot read chunks file {source}: {exc}"))
    except GuideQaError as exc:
        _fail(exc)
    provider = build_embedding_provider(cfg)
    report = OperationReport()
    try:
        records = embed_chunks(chunks, provider, report=report)
        collection = build_collection(cfg.storage.collection_name, provider.dimension, records)
        directory = persist_collection(collection, cfg.storage.collection_root)
    except GuideQaError as exc:
        _fail(exc)
    for note in report:
        click.echo(f"warning: {note}", err=True)
    click.echo(f"indexed {len(records)} chunks into {directory}")


@main.command()
@click.option("--question", required=True, help="The question to answer.")
@click.option(
    "--mode",
    type=click.Choice(["enhanced", "agentic"]),
    default="enhanced",
    show_default=True,
)
@click.option("--json", "as_json", is_flag=True, help="Print a JSON document instead of text.")
@click.pass_context
def ask(ctx: click.Context, question: str, mode: str, as_json: bool) -> None:
    """Answer one question over the indexed corpus."""
    cfg = _load_config(ctx.obj["config_path"])
    if not question.strip():
        _fail(ValidationError("question must be non-empty"))
    try:
        engine = QaEngine.from_config(cfg)
        if mode == "enhanced":
            answer = engine.ask_enhanced(question)
            trace = None
        else:
            answer, agent_trace = engine.ask_agentic(question)
            trace = trace_to_json(agent_trace)
    except GuideQaError as exc:
        _fail(exc)

    citations = [
        {
            "chunk_id": c.chunk_id,
            "filename": c.filename,
            "page": c.page,
            "excerpt": c.excerpt,
        }
        for c in answer.citations
    ]
    if as_json:
        document = {
            "question": question,
            "mode": mode,
            "answer": answer.text,
            "citations": citations,
            "trace": trace,
            "latency_s": answer.latency_s,
        }
        click.echo(json.dumps(document, ensure_ascii=False, indent=2))
        return
    click.echo(answer.text)
    if citations:
        click.echo("\nSources:")
        for n, c in enumerate(citations, start=1):
            location = c["filename"] if c["page"] is None else f"{c['filename']}, page {c['page']}"
            click.echo(f"  [{n}] ({location}) {c['excerpt']}")
    click.echo(f"\nlatency: {answer.latency_s:.3f}s")


@main.command("bench-gen")
@click.option("--chunks", "chunks_path", default=None, help="Chunks file (default from config).")
@click.option("--out", "out_path", required=True, help="Dataset JSON file to write.")
@click.pass_context
def bench_gen(ctx: click.Context, chunks_path: str | None, out_path: str) -> None:
    """Generate the tiered QA benchmark dataset from the chunks."""
    cfg = _load_config(ctx.obj["config_path"])
    source = Path(chunks_path) if chunks_path else cfg.storage.chunks_path
    try:
        with source.open("rb") as handle:
            chunks = load_chunks(handle)
        llm = build_language_provider(cfg)
        report = OperationReport()
        dataset = benchmark_mod.generate_dataset(chunks, llm, report=report)
        target = Path(out_path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("wb") as handle:
            benchmark_mod.save_dataset(dataset, handle)
    except OSError as exc:
        _fail(ValidationError(f"cannot read chunks file {source}: {exc}"))
    except GuideQaError as exc:
        _fail(exc)
    for note in report:
        click.echo(f"warning: {note}", err=True)
    click.echo(f"wrote {len(dataset.items)} items to {out_path}")


@main.command("eval")
@click.option("--records", "records_path", required=True)
@click.option("--out-dir", "out_dir", default=None, help="Report directory (default from config).")
@click.pass_context
def eval_cmd(ctx: click.Context, records_path: str, out_dir: str | None) -> None:
    """Build the comparison report (JSON, text tables, figures) from records."""
    cfg = _load_config(ctx.obj["config_path"])
    _require_files([records_path])
    directory = Path(out_dir) if out_dir else cfg.storage.report_dir
    try:
        with open(records_path, "rb") as handle:
            records = evaluation.load_records(handle)
        reports = evaluation.build_report(records)
    except GuideQaError as exc:
        _fail(exc)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "report.json").write_text(
        json.dumps(evaluation.report_to_json(reports), ensure_ascii=False, indent=2),
        encoding="utf-8",
    )
    text = evaluation.render_text_report(reports)
    (directory / "report.txt").write_text(text, encoding="utf-8")
    figure_paths = render_report_figures(reports, directory)
    click.echo(text)
    click.echo(f"report written to {directory} ({', '.join(p.name for p in figure_paths)})")


@main.command()
@click.pass_context
def serve(ctx: click.Context) -> None:
    """Start the HTTP service."""
    cfg = _load_config(ctx.obj["config_path"])
    try:
        run_service(cfg)
    except GuideQaError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
