"""Parsed-document elements: loading, cleaning, title-based chunking, chunk I/O.

The engine consumes pre-parsed element JSON (one array per source document)
and turns it into retrievable chunks: narrative content grouped under its
section title (CompositeElement) and tables kept as standalone units with
their HTML preserved (TableElement).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from typing import IO, TYPE_CHECKING, Union

from .errors import (
    CleaningError,
    EnrichmentError,
    FormatError,
    ParseError,
    SchemaError,
    StorageError,
    ValidationError,
)

if TYPE_CHECKING:
    from .providers import LanguageProvider

KIND_TITLE = "Title"
KIND_NARRATIVE = "NarrativeText"
KIND_TABLE = "Table"
KIND_UNCATEGORIZED = "UncategorizedText"
KNOWN_KINDS = frozenset({KIND_TITLE, KIND_NARRATIVE, KIND_TABLE, KIND_UNCATEGORIZED})

# Default separator between constituent texts inside a composite chunk.
# A blank line keeps paragraph boundaries visible to downstream prompting.
DEFAULT_SEPARATOR = "\n\n"

CHUNKS_FORMAT_VERSION = "1"

TABLE_DESCRIPTION_SYSTEM = (
    "Tu es un assistant qui résume des tableaux issus de guides de vaccination "
    "pour des professionnels de santé."
)
TABLE_DESCRIPTION_TEMPLATE = (
    "Décris en une ou deux phrases le contenu du tableau suivant (colonnes, "
    "lignes, information portée), en français.\n\nTableau :\n{content}\n\n"
    "HTML :\n{html}"
)


@dataclass(frozen=True)
class ElementMetadata:
    filename: str
    filetype: str = ""
    page: int | None = None
    languages: tuple[str, ...] = ()
    text_as_html: str | None = None

    def __post_init__(self):
        if not self.filename:
            raise ValidationError("element metadata requires a non-empty filename")
        if self.page is not None and self.page < 1:
            raise ValidationError(f"page must be a positive integer, got {self.page}")


@dataclass(frozen=True)
class DocumentElement:
    """One parsed unit of a source document.

    ``kind`` carries the parser's type label verbatim; labels outside
    KNOWN_KINDS are retained as-is and treated like narrative text downstream.
    """

    element_id: str
    kind: str
    text: str
    metadata: ElementMetadata

    @property
    def is_title(self) -> bool:
        return self.kind == KIND_TITLE

    @property
    def is_table(self) -> bool:
        return self.kind == KIND_TABLE

    @property
    def is_other(self) -> bool:
        return self.kind not in KNOWN_KINDS


@dataclass(frozen=True)
class CompositeElement:
    """Title-grouped narrative content, joined by the chunking separator."""

    element_id: str
    text: str
    element_ids: tuple[str, ...]
    metadata: ElementMetadata

    def __post_init__(self):
        if not self.element_ids:
            raise ValidationError("a composite chunk needs at least one constituent element")

    @property
    def variant(self) -> str:
        return "composite"


@dataclass(frozen=True)
class TableElement:
    """A table kept as its own chunk: raw content, optional description, HTML."""

    element_id: str
    content: str
    html: str
    metadata: ElementMetadata
    ai_description: str | None = None

    def __post_init__(self):
        if not self.html:
            raise ValidationError(f"table chunk {self.element_id!r} requires non-empty html")

    @property
    def variant(self) -> str:
        return "table"


Chunk = Union[CompositeElement, TableElement]


@dataclass(frozen=True)
class CleaningSpec:
    """Which spans and element kinds to strip before chunking.

    Each delimiter pair names the title that opens a boilerplate span and the
    title that closes it; the span is removed inclusive of both titles.
    """

    delimiter_pairs: tuple[tuple[str, str], ...] = ()
    drop_kinds: frozenset[str] = frozenset()

    def __post_init__(self):
        for start, end in self.delimiter_pairs:
            if start == end:
                raise ValidationError(
                    f"delimiter pair start and end must differ, got {start!r} twice"
                )


class OperationReport:
    """Collects non-fatal notes (skips, degradations) emitted by an operation."""

    def __init__(self):
        self.notes: list[str] = []

    def add(self, note: str) -> None:
        self.notes.append(note)

    def __bool__(self) -> bool:
        return bool(self.notes)

    def __iter__(self):
        return iter(self.notes)


def _read_bytes(source: Union[bytes, IO[bytes]]) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    return source.read()


def _require(entry: dict, key: str, index: int):
    if key not in entry:
        raise SchemaError(f"entry {index} is missing required field {key!r}")
    return entry[key]


def load_elements(source: Union[bytes, IO[bytes]]) -> list[DocumentElement]:
    """Parse an element-array JSON document into DocumentElements.

    Unrecognized type labels are retained verbatim (the Other case). Raises
    ParseError with the byte offset for malformed JSON and SchemaError naming
    the field and entry index for structural problems.
    """
    raw = _read_bytes(source)
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8: {exc}", byte_offset=exc.start) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise ParseError(
            f"malformed JSON at byte {offset}: {exc.msg}", byte_offset=offset
        ) from exc
    if not isinstance(data, list):
        raise SchemaError(f"expected a JSON array of elements, got {type(data).__name__}")

    elements: list[DocumentElement] = []
    seen_ids: set[str] = set()
    for index, entry in enumerate(data):
        if not isinstance(entry, dict):
            raise SchemaError(f"entry {index} is not a JSON object")
        element_id = str(_require(entry, "element_id", index))
        kind = str(_require(entry, "type", index))
        text_value = _require(entry, "text", index)
        meta_raw = _require(entry, "metadata", index)
        if not isinstance(meta_raw, dict):
            raise SchemaError(f"entry {index} field 'metadata' must be an object")
        if "filename" not in meta_raw or not meta_raw["filename"]:
            raise SchemaError(f"entry {index} is missing required field 'metadata.filename'")
        if element_id in seen_ids:
            raise SchemaError(f"entry {index} duplicates element_id {element_id!r}")
        seen_ids.add(element_id)

        html = meta_raw.get("text_as_html")
        if kind == KIND_TABLE and not html:
            raise SchemaError(
                f"entry {index} is a Table but is missing field 'metadata.text_as_html'"
            )
        page = meta_raw.get("page_number")
        if page is not None and (not isinstance(page, int) or page < 1):
            raise SchemaError(f"entry {index} field 'metadata.page_number' must be a positive integer")
        metadata = ElementMetadata(
            filename=str(meta_raw["filename"]),
            filetype=str(meta_raw.get("filetype", "")),
            page=page,
            languages=tuple(meta_raw.get("languages") or ()),
            text_as_html=html,
        )
        elements.append(
            DocumentElement(element_id=element_id, kind=kind, text=str(text_value), metadata=metadata)
        )
    return elements


def clean_elements(elements: list[DocumentElement], spec: CleaningSpec) -> list[DocumentElement]:
    """Drop delimiter-bounded spans (boundaries included) and unwanted kinds.

    A span opens at a Title whose text equals a pair's start and closes at the
    next Title equal to that pair's end. An opened span that never closes is an
    error rather than a silent truncation. Survivors keep their relative order.
    """
    kept: list[DocumentElement] = []
    i = 0
    n = len(elements)
    while i < n:
        el = elements[i]
        end_text = None
        if el.is_title:
            for start, end in spec.delimiter_pairs:
                if el.text == start:
                    end_text = end
                    break
        if end_text is None:
            kept.append(el)
            i += 1
            continue
        j = i + 1
        while j < n:
            candidate = elements[j]
            if candidate.is_title and candidate.text == end_text:
                break
            j += 1
        if j >= n:
            raise CleaningError(
                f"unmatched start delimiter {el.text!r} at element index {i}: "
                f"no closing title {end_text!r} before end of document"
            )
        i = j + 1  # skip the span, both boundary titles included
    return [el for el in kept if el.kind not in spec.drop_kinds]


def _composite_id(element_ids: tuple[str, ...]) -> str:
    digest = hashlib.sha256("\x1f".join(element_ids).encode("utf-8")).hexdigest()
    return f"cmp-{digest[:16]}"


def _make_composite(parts: list[DocumentElement], separator: str) -> CompositeElement:
    ids = tuple(el.element_id for el in parts)
    return CompositeElement(
        element_id=_composite_id(ids),
        text=separator.join(el.text for el in parts),
        element_ids=ids,
        metadata=parts[0].metadata,
    )


def chunk_by_title(
    elements: list[DocumentElement], separator: str = DEFAULT_SEPARATOR
) -> list[Chunk]:
    """Group elements into chunks along Title boundaries.

    Every Title opens a new composite that absorbs following non-title,
    non-table elements until the next Title; elements before the first Title
    form one headerless composite. Tables become standalone TableElements.
    Output is ordered by each chunk's first source position.
    """
    staged: list[tuple[int, Chunk]] = []
    current: list[DocumentElement] = []
    current_start = 0

    def close_current():
        if current:
            staged.append((current_start, _make_composite(current, separator)))

    for index, el in enumerate(elements):
        if el.is_table:
            staged.append(
                (
                    index,
                    TableElement(
                        element_id=el.element_id,
                        content=el.text,
                        html=el.metadata.text_as_html or "",
                        metadata=el.metadata,
                    ),
                )
            )
        elif el.is_title:
            close_current()
            current = [el]
            current_start = index
        else:
            if not current:
                current_start = index
            current.append(el)
    close_current()

    staged.sort(key=lambda pair: pair[0])
    return [chunk for _, chunk in staged]


def enrich_table(table: TableElement, llm: "LanguageProvider") -> TableElement:
    """Attach a model-written description to a table; content and html stay put."""
    if not table.html:
        raise ValidationError(f"table {table.element_id!r} has no html to describe")
    prompt = TABLE_DESCRIPTION_TEMPLATE.format(content=table.content, html=table.html)
    try:
        description = llm.generate(TABLE_DESCRIPTION_SYSTEM, prompt)
    except Exception as exc:
        raise EnrichmentError(
            f"description generation failed for table {table.element_id!r}: {exc}"
        ) from exc
    return replace(table, ai_description=description.strip())


def retrieval_text(chunk: Chunk) -> str:
    """The text a retriever should index for this chunk.

    Tables expose their raw content plus the generated description when one is
    present; the description exists precisely to make tables discoverable.
    """
    if isinstance(chunk, TableElement):
        if chunk.ai_description:
            return f"{chunk.content}\n\n{chunk.ai_description}"
        return chunk.content
    return chunk.text


def _metadata_to_dict(meta: ElementMetadata) -> dict:
    out: dict = {"filename": meta.filename, "filetype": meta.filetype}
    if meta.page is not None:
        out["page"] = meta.page
    if meta.languages:
        out["languages"] = list(meta.languages)
    if meta.text_as_html is not None:
        out["text_as_html"] = meta.text_as_html
    return out


def _metadata_from_dict(raw: dict) -> ElementMetadata:
    if "filename" not in raw:
        raise SchemaError("chunk metadata is missing required field 'filename'")
    return ElementMetadata(
        filename=raw["filename"],
        filetype=raw.get("filetype", ""),
        page=raw.get("page"),
        languages=tuple(raw.get("languages") or ()),
        text_as_html=raw.get("text_as_html"),
    )


def chunk_to_dict(chunk: Chunk) -> dict:
    if isinstance(chunk, CompositeElement):
        return {
            "variant": "composite",
            "element_id": chunk.element_id,
            "text": chunk.text,
            "element_ids": list(chunk.element_ids),
            "metadata": _metadata_to_dict(chunk.metadata),
        }
    out = {
        "variant": "table",
        "element_id": chunk.element_id,
        "content": chunk.content,
        "html": chunk.html,
        "metadata": _metadata_to_dict(chunk.metadata),
    }
    if chunk.ai_description is not None:
        out["ai_description"] = chunk.ai_description
    return out


def chunk_from_dict(raw: dict) -> Chunk:
    variant = raw.get("variant")
    if variant == "composite":
        for key in ("element_id", "text", "element_ids", "metadata"):
            if key not in raw:
                raise SchemaError(f"composite chunk is missing required field {key!r}")
        return CompositeElement(
            element_id=raw["element_id"],
            text=raw["text"],
            element_ids=tuple(raw["element_ids"]),
            metadata=_metadata_from_dict(raw["metadata"]),
        )
    if variant == "table":
        for key in ("element_id", "content", "html", "metadata"):
            if key not in raw:
                raise SchemaError(f"table chunk is missing required field {key!r}")
        return TableElement(
            element_id=raw["element_id"],
            content=raw["content"],
            html=raw["html"],
            metadata=_metadata_from_dict(raw["metadata"]),
            ai_description=raw.get("ai_description"),
        )
    raise SchemaError(f"unknown chunk variant {variant!r}")


def save_chunks(chunks: list[Chunk], sink: IO[bytes]) -> None:
    """Serialize chunks as versioned JSON; round-trips field-for-field."""
    payload = {
        "version": CHUNKS_FORMAT_VERSION,
        "chunks": [chunk_to_dict(c) for c in chunks],
    }
    try:
        sink.write(json.dumps(payload, ensure_ascii=False, indent=2).encode("utf-8"))
    except OSError as exc:
        raise StorageError(f"failed to write chunks: {exc}") from exc


def load_chunks(source: Union[bytes, IO[bytes]]) -> list[Chunk]:
    try:
        raw = _read_bytes(source)
    except OSError as exc:
        raise StorageError(f"failed to read chunks: {exc}") from exc
    try:
        payload = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"chunks file is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or "version" not in payload:
        raise FormatError("chunks file is missing its version field")
    if payload["version"] != CHUNKS_FORMAT_VERSION:
        raise FormatError(
            f"unsupported chunks format version {payload['version']!r}, "
            f"expected {CHUNKS_FORMAT_VERSION!r}"
        )
    return [chunk_from_dict(entry) for entry in payload.get("chunks", [])]
