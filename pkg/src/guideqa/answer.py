"""Grounded answer generation: prompt assembly, table rendering, citations."""

from __future__ import annotations

import re
import time
from dataclasses import dataclass
from enum import Enum
from html.parser import HTMLParser

from .errors import ConversionError, GenerationError, ValidationError
from .providers import LanguageProvider

DEFAULT_EXCERPT_CHARS = 200

SYSTEM_INSTRUCTIONS = (
    "You are a virtual assistant for healthcare professionals / Vous êtes un "
    "assistant virtuel pour les professionnels de santé.\n"
    "Answer strictly from the numbered context blocks below; never rely on "
    "outside knowledge. Réponds uniquement à partir des blocs de contexte "
    "numérotés, dans la langue de la question.\n"
    "If the context does not contain the answer, say you could not find the "
    "information (for example: \"Je suis désolé, je n'ai pas trouvé cette "
    "information dans les documents fournis.\").\n"
    "After each supported statement, cite the block it came from using its "
    "marker, e.g. [1] or [2]."
)

NO_CONTEXT_BLOCK = (
    "No context available / Aucun contexte disponible. Reply that the "
    "information could not be found."
)


class Mode(str, Enum):
    SIMPLE = "simple"
    ENHANCED = "enhanced"
    AGENTIC = "agentic"


@dataclass(frozen=True)
class ContextBlock:
    chunk_id: str
    filename: str
    page: int | None
    text: str


@dataclass(frozen=True)
class TableContext:
    chunk_id: str
    html: str


@dataclass(frozen=True)
class ContextBundle:
    """Everything the generator sees for one question."""

    chunks: tuple[ContextBlock, ...]
    tables: tuple[TableContext, ...]
    question: str

    def __post_init__(self):
        ids = [c.chunk_id for c in self.chunks]
        if len(ids) != len(set(ids)):
            raise ValidationError("context bundle contains duplicate chunk_ids")


@dataclass(frozen=True)
class Citation:
    chunk_id: str
    filename: str
    excerpt: str
    page: int | None = None


@dataclass(frozen=True)
class Answer:
    text: str
    citations: tuple[Citation, ...]
    mode: Mode
    latency_s: float

    def __post_init__(self):
        if self.latency_s < 0:
            raise ValidationError("latency cannot be negative")


@dataclass
class _Cell:
    text: str
    colspan: int
    rowspan: int
    header: bool


class _TableHtmlParser(HTMLParser):
    """Collects rows of (text, colspan, rowspan, header) cells from table HTML."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.saw_table = False
        self.rows: list[list[_Cell]] = []
        self._row: list[_Cell] | None = None
        self._cell: _Cell | None = None
        self._text: list[str] = []

    @staticmethod
    def _span(attrs: list[tuple[str, str | None]], name: str) -> int:
        for key, value in attrs:
            if key == name and value:
                try:
                    return max(1, int(value))
                except ValueError:
                    return 1
        return 1

    def handle_starttag(self, tag, attrs):
        if tag == "table":
            self.saw_table = True
        elif tag == "tr":
            self._flush_cell()
            self._row = []
        elif tag in ("td", "th"):
            self._flush_cell()
            if self._row is None:
                self._row = []
            self._cell = _Cell(
                text="",
                colspan=self._span(attrs, "colspan"),
                rowspan=self._span(attrs, "rowspan"),
                header=tag == "th",
            )
            self._text = []

    def handle_endtag(self, tag):
        if tag in ("td", "th"):
            self._flush_cell()
        elif tag == "tr":
            self._flush_cell()
            if self._row is not None:
                self.rows.append(self._row)
                self._row = None

    def handle_data(self, data):
        if self._cell is not None:
            self._text.append(data)

    def _flush_cell(self):
        if self._cell is not None:
            self._cell.text = " ".join("".join(self._text).split())
            assert self._row is not None
            self._row.append(self._cell)
            self._cell = None
            self._text = []

    def close(self):
        super().close()
        self._flush_cell()
        if self._row is not None:
            self.rows.append(self._row)
            self._row = None


def _expand_spans(raw_rows: list[list[_Cell]]) -> tuple[list[list[str]], list[list[bool]]]:
    """Flatten colspan/rowspan by repeating cell text into the covered slots."""
    texts: list[list[str]] = []
    headers: list[list[bool]] = []
    carry: dict[int, tuple[str, int, bool]] = {}  # column -> (text, rows left, header)
    for cells in raw_rows:
        row: dict[int, tuple[str, bool]] = {}
        next_carry: dict[int, tuple[str, int, bool]] = {}
        for col, (text, left, hdr) in carry.items():
            row[col] = (text, hdr)
            if left > 1:
                next_carry[col] = (text, left - 1, hdr)
        col = 0
        for cell in cells:
            for _ in range(cell.colspan):
                while col in row:
                    col += 1
                row[col] = (cell.text, cell.header)
                if cell.rowspan > 1:
                    next_carry[col] = (cell.text, cell.rowspan - 1, cell.header)
                col += 1
        carry = next_carry
        width = max(row) + 1 if row else 0
        texts.append([row.get(i, ("", False))[0] for i in range(width)])
        headers.append([row.get(i, ("", False))[1] for i in range(width)])
    return texts, headers


def html_table_to_markdown(html: str) -> str:
    """Render table HTML as a GitHub-style pipe table.

    The header row comes from th cells when a row of them exists, otherwise the
    first row is promoted. Ragged rows are padded with empty cells.
    """
    parser = _TableHtmlParser()
    parser.feed(html)
    parser.close()
    if not parser.saw_table:
        raise ConversionError("input contains no <table> element")
    texts, headers = _expand_spans(parser.rows)
    kept = [(t, h) for t, h in zip(texts, headers) if t]
    if not kept:
        return ""
    texts = [t for t, _ in kept]
    headers = [h for _, h in kept]

    header_idx = 0
    for i, flags in enumerate(headers):
        if flags and all(flags):
            header_idx = i
            break
    width = max(len(row) for row in texts)

    def fmt(row: list[str]) -> str:
        padded = row + [""] * (width - len(row))
        cells = [c.replace("|", "\\|") for c in padded]
        return "| " + " | ".join(cells) + " |"

    lines = [fmt(texts[header_idx]), "| " + " | ".join(["---"] * width) + " |"]
    for i, row in enumerate(texts):
        if i != header_idx:
            lines.append(fmt(row))
    return "\n".join(lines)


def build_prompt(bundle: ContextBundle) -> tuple[str, str]:
    """Deterministically assemble (system instructions, user content)."""
    tables_by_id = {t.chunk_id: t.html for t in bundle.tables}
    parts: list[str] = ["Context:"]
    if not bundle.chunks:
        parts.append(NO_CONTEXT_BLOCK)
    for n, block in enumerate(bundle.chunks, start=1):
        location = block.filename
        if block.page is not None:
            location += f", page {block.page}"
        parts.append(f"[{n}] ({location})\n{block.text}")
        html = tables_by_id.get(block.chunk_id)
        if html is not None:
            try:
                rendered = html_table_to_markdown(html)
            except ConversionError:
                rendered = ""  # block text already carries the table content
            if rendered:
                parts.append(rendered)
    parts.append(f"Question: {bundle.question}")
    return SYSTEM_INSTRUCTIONS, "\n\n".join(parts)


_MARKER_RE = re.compile(r"\[(\d+)\]")


def make_excerpt(text: str, limit: int = DEFAULT_EXCERPT_CHARS) -> str:
    """A verbatim prefix of `text`, cut at a word boundary within `limit` chars."""
    if len(text) <= limit:
        return text
    head = text[:limit]
    if not text[limit].isspace():
        space = head.rfind(" ")
        if space > 0:
            head = head[:space]
    return head.rstrip()


def _citation_for(block: ContextBlock, excerpt_chars: int) -> Citation:
    return Citation(
        chunk_id=block.chunk_id,
        filename=block.filename,
        page=block.page,
        excerpt=make_excerpt(block.text, excerpt_chars),
    )


def answer_question(
    question: str,
    bundle: ContextBundle,
    llm: LanguageProvider,
    mode: Mode = Mode.ENHANCED,
    excerpt_chars: int = DEFAULT_EXCERPT_CHARS,
) -> Answer:
    """Generate a grounded answer and resolve its citation markers.

    Markers like "[2]" in the model output are resolved against the numbered
    context blocks. When the model emits no markers over a non-empty context,
    every block is cited: traceability beats precision for this product.
    """
    system, user = build_prompt(bundle)
    started = time.perf_counter()
    try:
        text = llm.generate(system, user)
    except Exception as exc:
        raise GenerationError(
            f"generation failed for question {question!r} (mode={mode.value}): {exc}"
        ) from exc
    latency = time.perf_counter() - started

    cited: list[int] = []
    for raw in _MARKER_RE.findall(text):
        n = int(raw)
        if 1 <= n <= len(bundle.chunks) and n not in cited:
            cited.append(n)
    if not cited and bundle.chunks:
        cited = list(range(1, len(bundle.chunks) + 1))
    citations = tuple(_citation_for(bundle.chunks[n - 1], excerpt_chars) for n in cited)
    return Answer(text=text, citations=citations, mode=mode, latency_s=latency)
