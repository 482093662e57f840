"""Flat cosine-similarity vector collection with binary persistence.

The corpus is guideline-scale (thousands of chunks), so search is an exact
exhaustive scan over unit-norm float32 vectors; no approximate index is worth
its complexity here. Persistence is a manifest + raw little-endian float32
rows + a JSON payload file, and round-trips bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Chunk, OperationReport, TableElement, retrieval_text
from .errors import FormatError, IndexingError, QueryError, StorageError, ValidationError
from .providers import EmbeddingKind, EmbeddingProvider
from .retrieve import Provenance, RetrievalResult

COLLECTION_FORMAT_VERSION = "1"
_MANIFEST_FILE = "manifest.json"
_VECTORS_FILE = "vectors.bin"
_PAYLOADS_FILE = "payloads.json"

NORM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ChunkRef:
    """Payload stored beside each vector, enough to render a search hit."""

    chunk_id: str
    filename: str
    variant: str
    page: int | None = None
    html: str | None = None


@dataclass(frozen=True)
class VectorRecord:
    chunk_id: str
    vector: np.ndarray  # float32, unit norm
    payload: ChunkRef


class VectorCollection:
    """A named set of unit-norm vectors keyed by chunk_id, cosine top-k searchable."""

    def __init__(self, name: str, dimension: int):
        if not name:
            raise ValidationError("collection name must be non-empty")
        if dimension < 1:
            raise ValidationError("collection dimension must be positive")
        self.name = name
        self.dimension = dimension
        self._records: list[VectorRecord] = []
        self._index: dict[str, int] = {}
        self._matrix: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._records)

    def records(self) -> list[VectorRecord]:
        return list(self._records)

    def get(self, chunk_id: str) -> VectorRecord | None:
        idx = self._index.get(chunk_id)
        return self._records[idx] if idx is not None else None

    def add(self, record: VectorRecord) -> None:
        if record.chunk_id in self._index:
            raise ValidationError(f"chunk_id {record.chunk_id!r} already in collection {self.name!r}")
        vector = np.asarray(record.vector, dtype=np.float32)
        if vector.shape != (self.dimension,):
            raise ValidationError(
                f"vector for {record.chunk_id!r} has shape {vector.shape}, "
                f"expected ({self.dimension},)"
            )
        norm = float(np.linalg.norm(vector.astype(np.float64)))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValidationError(
                f"vector for {record.chunk_id!r} is not unit-norm (|v|={norm:.8f})"
            )
        self._records.append(VectorRecord(record.chunk_id, vector, record.payload))
        self._index[record.chunk_id] = len(self._records) - 1
        self._matrix = None

    def extend(self, records: list[VectorRecord]) -> None:
        for record in records:
            self.add(record)

    def _stacked(self) -> np.ndarray:
        if self._matrix is None:
            if self._records:
                self._matrix = np.stack([r.vector for r in self._records]).astype(np.float64)
            else:
                self._matrix = np.empty((0, self.dimension), dtype=np.float64)
        return self._matrix

    def search(
        self, query_vector: np.ndarray, k: int, source_query: str = ""
    ) -> list[RetrievalResult]:
        """Exact top-k by cosine similarity; ties broken by ascending chunk_id."""
        if k < 1:
            raise ValidationError("k must be >= 1")
        query = np.asarray(query_vector, dtype=np.float64)
        if query.shape != (self.dimension,):
            raise QueryError(
                f"query vector has shape {query.shape}, expected ({self.dimension},)"
            )
        if not self._records:
            return []
        scores = self._stacked() @ query
        order = sorted(range(len(self._records)), key=lambda i: (-scores[i], self._records[i].chunk_id))
        return [
            RetrievalResult(
                chunk_id=self._records[i].chunk_id,
                score=float(scores[i]),
                provenance=Provenance.DENSE,
                source_query=source_query,
            )
            for i in order[:k]
        ]


def dense_search(
    collection: VectorCollection, query_vector: np.ndarray, k: int, source_query: str = ""
) -> list[RetrievalResult]:
    return collection.search(query_vector, k, source_query=source_query)


def _chunk_ref(chunk: Chunk) -> ChunkRef:
    return ChunkRef(
        chunk_id=chunk.element_id,
        filename=chunk.metadata.filename,
        variant=chunk.variant,
        page=chunk.metadata.page,
        html=chunk.html if isinstance(chunk, TableElement) else None,
    )


def embed_chunks(
    chunks: list[Chunk],
    provider: EmbeddingProvider,
    report: OperationReport | None = None,
) -> list[VectorRecord]:
    """One unit-norm record per non-empty chunk, embedded as passages.

    Chunks whose retrieval text is empty are skipped with a report note rather
    than being indexed as meaningless vectors.
    """
    records: list[VectorRecord] = []
    for chunk in chunks:
        text = retrieval_text(chunk)
        if not text.strip():
            if report is not None:
                report.add(f"chunk {chunk.element_id!r} skipped: empty text")
            continue
        try:
            vector = provider.embed([text], kind=EmbeddingKind.PASSAGE)[0]
        except Exception as exc:
            raise IndexingError(f"embedding failed for chunk {chunk.element_id!r}: {exc}") from exc
        records.append(
            VectorRecord(
                chunk_id=chunk.element_id,
                vector=np.asarray(vector, dtype=np.float32),
                payload=_chunk_ref(chunk),
            )
        )
    return records


def build_collection(name: str, dimension: int, records: list[VectorRecord]) -> VectorCollection:
    collection = VectorCollection(name, dimension)
    collection.extend(records)
    return collection


def _payload_to_dict(ref: ChunkRef) -> dict:
    out: dict = {"chunk_id": ref.chunk_id, "filename": ref.filename, "variant": ref.variant}
    if ref.page is not None:
        out["page"] = ref.page
    if ref.html is not None:
        out["html"] = ref.html
    return out


def persist_collection(collection: VectorCollection, root: str | Path) -> Path:
    """Write the collection under root/<name>/; returns the collection directory."""
    directory = Path(root) / collection.name
    try:
        directory.mkdir(parents=True, exist_ok=True)
        records = collection.records()
        manifest = {
            "name": collection.name,
            "dimension": collection.dimension,
            "count": len(records),
            "format_version": COLLECTION_FORMAT_VERSION,
        }
        (directory / _MANIFEST_FILE).write_text(
            json.dumps(manifest, ensure_ascii=False, indent=2), encoding="utf-8"
        )
        if records:
            matrix = np.stack([r.vector for r in records]).astype("<f4")
        else:
            matrix = np.empty((0, collection.dimension), dtype="<f4")
        (directory / _VECTORS_FILE).write_bytes(matrix.tobytes(order="C"))
        payloads = [_payload_to_dict(r.payload) for r in records]
        (directory / _PAYLOADS_FILE).write_text(
            json.dumps(payloads, ensure_ascii=False, indent=2), encoding="utf-8"
        )
    except OSError as exc:
        raise StorageError(f"failed to persist collection {collection.name!r}: {exc}") from exc
    return directory


def open_collection(path: str | Path) -> VectorCollection:
    """Open a persisted collection directory; bit-exact inverse of persist."""
    directory = Path(path)
    manifest_path = directory / _MANIFEST_FILE
    if not manifest_path.is_file():
        raise StorageError(f"no collection manifest at {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise StorageError(f"unreadable collection manifest {manifest_path}: {exc}") from exc
    if manifest.get("format_version") != COLLECTION_FORMAT_VERSION:
        raise FormatError(
            f"unsupported collection format version {manifest.get('format_version')!r}"
        )
    for key in ("name", "dimension", "count"):
        if key not in manifest:
            raise FormatError(f"collection manifest is missing field {key!r}")
    dimension = int(manifest["dimension"])
    count = int(manifest["count"])
    try:
        blob = (directory / _VECTORS_FILE).read_bytes()
        payloads = json.loads((directory / _PAYLOADS_FILE).read_text(encoding="utf-8"))
    except OSError as exc:
        raise StorageError(f"collection files missing under {directory}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise StorageError(f"corrupt payload file under {directory}: {exc}") from exc
    expected = count * dimension * 4
    if len(blob) != expected:
        raise FormatError(
            f"vector file holds {len(blob)} bytes but the manifest implies {expected} "
            f"(count={count}, dimension={dimension})"
        )
    if len(payloads) != count:
        raise FormatError(f"payload file holds {len(payloads)} entries, manifest says {count}")

    matrix = np.frombuffer(blob, dtype="<f4").reshape(count, dimension)
    collection = VectorCollection(manifest["name"], dimension)
    for row, payload in zip(matrix, payloads):
        ref = ChunkRef(
            chunk_id=payload["chunk_id"],
            filename=payload["filename"],
            variant=payload["variant"],
            page=payload.get("page"),
            html=payload.get("html"),
        )
        collection.add(VectorRecord(chunk_id=ref.chunk_id, vector=row.copy(), payload=ref))
    return collection
