"""Automated question generation over chunks: a Bloom-tiered QA dataset.

Each chunk yields three questions of increasing cognitive demand; difficulty
is the fixed image of the question type (factual→easy, conceptual→medium,
applied→hard). The provider answers in a line-parsable wire format:

    Q: <question>
    A: <answer>
    TYPE: <factual|conceptual|applied>
    ---
    (three blocks)
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Union

from .corpus import Chunk, OperationReport, TableElement
from .errors import FormatError, GenerationError, SchemaError, StorageError, ValidationError
from .providers import LanguageProvider

DATASET_FORMAT_VERSION = "1"
DEFAULT_LANGUAGE = "fr"


class QType(str, Enum):
    FACTUAL = "factual"
    CONCEPTUAL = "conceptual"
    APPLIED = "applied"


class Difficulty(str, Enum):
    EASY = "easy"
    MEDIUM = "medium"
    HARD = "hard"


DIFFICULTY_FOR_QTYPE = {
    QType.FACTUAL: Difficulty.EASY,
    QType.CONCEPTUAL: Difficulty.MEDIUM,
    QType.APPLIED: Difficulty.HARD,
}


@dataclass(frozen=True)
class BenchmarkItem:
    item_id: str
    question: str
    reference_answer: str
    qtype: QType
    difficulty: Difficulty
    source_chunk_id: str
    filename: str
    language: str = DEFAULT_LANGUAGE
    page: int | None = None

    def __post_init__(self):
        if DIFFICULTY_FOR_QTYPE[self.qtype] is not self.difficulty:
            raise ValidationError(
                f"item {self.item_id!r}: difficulty {self.difficulty.value!r} does not "
                f"match question type {self.qtype.value!r}"
            )


@dataclass
class BenchmarkDataset:
    items: list[BenchmarkItem]
    source_manifest: list[tuple[str, int]]
    generator_config: dict = field(default_factory=dict)


GENERATION_SYSTEM = (
    "You write exam questions about vaccination guidelines for healthcare "
    "professionals, in the language of the source text."
)
GENERATION_TEMPLATE = (
    "From the passage below, write exactly three question/answer pairs:\n"
    "one factual (direct recall), one conceptual (synthesis and comprehension),"
    " one applied (reasoning over a hypothetical scenario).\n"
    "Answer in this exact format, blocks separated by a line containing only"
    " ---:\n"
    "Q: <question>\nA: <answer>\nTYPE: <factual|conceptual|applied>\n\n"
    "Passage:\n{passage}"
)

_BLOCK_SPLIT_RE = re.compile(r"^\s*---\s*$", re.MULTILINE)
_FIELD_RE = re.compile(r"^(Q|A|TYPE):\s*(.*)$")


def _chunk_source_text(chunk: Chunk) -> str:
    return chunk.content if isinstance(chunk, TableElement) else chunk.text


def _parse_triple(block: str) -> tuple[str, str, QType] | None:
    fields: dict[str, list[str]] = {}
    current: str | None = None
    for line in block.splitlines():
        match = _FIELD_RE.match(line.strip())
        if match:
            current = match.group(1)
            fields.setdefault(current, []).append(match.group(2).strip())
        elif current is not None and line.strip():
            fields[current][-1] += " " + line.strip()
    question = " ".join(fields.get("Q", [])).strip()
    answer = " ".join(fields.get("A", [])).strip()
    type_raw = " ".join(fields.get("TYPE", [])).strip().lower()
    if not question or not answer:
        return None
    try:
        qtype = QType(type_raw)
    except ValueError:
        return None
    return question, answer, qtype


def generate_for_chunk(
    chunk: Chunk,
    llm: LanguageProvider,
    report: OperationReport | None = None,
) -> list[BenchmarkItem]:
    """Three tiered items for one chunk; unparseable triples are dropped with a note."""
    passage = _chunk_source_text(chunk)
    if not passage.strip():
        raise ValidationError(f"chunk {chunk.element_id!r} has no text to generate questions from")
    try:
        raw = llm.generate(GENERATION_SYSTEM, GENERATION_TEMPLATE.format(passage=passage))
    except Exception as exc:
        raise GenerationError(
            f"question generation failed for chunk {chunk.element_id!r}: {exc}"
        ) from exc

    meta = chunk.metadata
    language = meta.languages[0] if meta.languages else DEFAULT_LANGUAGE
    items: list[BenchmarkItem] = []
    for block in _BLOCK_SPLIT_RE.split(raw):
        if not block.strip():
            continue
        parsed = _parse_triple(block)
        if parsed is None:
            if report is not None:
                report.add(
                    f"chunk {chunk.element_id!r}: dropped an unparseable question block"
                )
            continue
        question, answer, qtype = parsed
        items.append(
            BenchmarkItem(
                item_id=f"{chunk.element_id}-q{len(items)}",
                question=question,
                reference_answer=answer,
                qtype=qtype,
                difficulty=DIFFICULTY_FOR_QTYPE[qtype],
                source_chunk_id=chunk.element_id,
                filename=meta.filename,
                language=language,
                page=meta.page,
            )
        )
    if not items and report is not None:
        report.add(f"chunk {chunk.element_id!r} skipped: no parseable question blocks")
    return items


def generate_dataset(
    chunks: list[Chunk],
    llm: LanguageProvider,
    config: dict | None = None,
    report: OperationReport | None = None,
) -> BenchmarkDataset:
    """Generate over all chunks; per-chunk failures are reported, not fatal."""
    if not chunks:
        raise ValidationError("cannot generate a dataset from zero chunks")
    items: list[BenchmarkItem] = []
    counts: dict[str, int] = {}
    for chunk in chunks:
        counts[chunk.metadata.filename] = counts.get(chunk.metadata.filename, 0) + 1
        try:
            items.extend(generate_for_chunk(chunk, llm, report=report))
        except (GenerationError, ValidationError) as exc:
            if report is not None:
                report.add(str(exc))
    snapshot = dict(config or {})
    snapshot.setdefault("provider", llm.name)
    snapshot.setdefault("questions_per_chunk", 3)
    return BenchmarkDataset(
        items=items,
        source_manifest=list(counts.items()),
        generator_config=snapshot,
    )


def _item_to_dict(item: BenchmarkItem) -> dict:
    out = {
        "item_id": item.item_id,
        "question": item.question,
        "reference_answer": item.reference_answer,
        "qtype": item.qtype.value,
        "difficulty": item.difficulty.value,
        "source_chunk_id": item.source_chunk_id,
        "filename": item.filename,
        "language": item.language,
    }
    if item.page is not None:
        out["page"] = item.page
    return out


def _item_from_dict(raw: dict) -> BenchmarkItem:
    item_id = raw.get("item_id", "<missing item_id>")
    for key in ("item_id", "question", "reference_answer", "qtype", "difficulty",
                "source_chunk_id", "filename", "language"):
        if key not in raw:
            raise SchemaError(f"item {item_id!r} is missing required field {key!r}")
    try:
        qtype = QType(raw["qtype"])
    except ValueError:
        raise SchemaError(f"item {item_id!r} has unknown qtype {raw['qtype']!r}") from None
    try:
        difficulty = Difficulty(raw["difficulty"])
    except ValueError:
        raise SchemaError(
            f"item {item_id!r} has unknown difficulty {raw['difficulty']!r}"
        ) from None
    try:
        return BenchmarkItem(
            item_id=raw["item_id"],
            question=raw["question"],
            reference_answer=raw["reference_answer"],
            qtype=qtype,
            difficulty=difficulty,
            source_chunk_id=raw["source_chunk_id"],
            filename=raw["filename"],
            language=raw["language"],
            page=raw.get("page"),
        )
    except ValidationError as exc:
        raise SchemaError(str(exc)) from exc


def save_dataset(dataset: BenchmarkDataset, sink: IO[bytes]) -> None:
    payload = {
        "version": DATASET_FORMAT_VERSION,
        "generator_config": dataset.generator_config,
        "manifest": [{"filename": f, "chunk_count": n} for f, n in dataset.source_manifest],
        "items": [_item_to_dict(item) for item in dataset.items],
    }
    try:
        sink.write(json.dumps(payload, ensure_ascii=False, indent=2).encode("utf-8"))
    except OSError as exc:
        raise StorageError(f"failed to write dataset: {exc}") from exc


def load_dataset(source: Union[bytes, IO[bytes]]) -> BenchmarkDataset:
    raw = source if isinstance(source, (bytes, bytearray)) else source.read()
    try:
        payload = json.loads(bytes(raw).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"dataset file is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("version") != DATASET_FORMAT_VERSION:
        raise FormatError(
            f"unsupported dataset version {payload.get('version')!r}"
            if isinstance(payload, dict)
            else "dataset file must be a JSON object"
        )
    manifest_raw = payload.get("manifest", [])
    manifest = []
    for entry in manifest_raw:
        if "filename" not in entry or "chunk_count" not in entry:
            raise SchemaError("manifest entries need 'filename' and 'chunk_count'")
        manifest.append((entry["filename"], entry["chunk_count"]))
    items = [_item_from_dict(entry) for entry in payload.get("items", [])]
    ids = [item.item_id for item in items]
    if len(ids) != len(set(ids)):
        raise SchemaError("dataset contains duplicate item_ids")
    return BenchmarkDataset(
        items=items,
        source_manifest=manifest,
        generator_config=payload.get("generator_config", {}),
    )
