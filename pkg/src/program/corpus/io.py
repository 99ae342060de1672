"""Corpus, detection and embedding file I/O.

Corpora are UTF-8 JSONL, one document per line with the keys ``id``, ``lang``,
``text`` and an optional ``meta`` object. Detection output adds ``segments``
with UTF-8 byte-offset spans. Embedding files are ``EMB1`` + u32 n + u32 d +
n*d little-endian float32 values, row-major.
"""
import json
import struct
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, overload

import numpy as np

from program.corpus.models import (
    CorpusModelError,
    CsSegment,
    DetectedDocument,
    Document,
    EmbeddingMatrix,
    LanguagePair,
    Span,
)
from program.types import Category, Level
from program.utils.logging import logger

EMBEDDING_MAGIC = b"EMB1"
EMBEDDING_HEADER = struct.Struct("<4sII")


class CorpusFormatError(Exception):
    """Raised for malformed corpus lines in strict mode"""


class DuplicateDocumentError(CorpusFormatError):
    """Raised when a document id repeats within one corpus file"""


class EmbeddingFormatError(Exception):
    """Raised for unreadable embedding files"""


@dataclass
class IngestReport:
    """Counts lines skipped while reading a corpus leniently."""
    warnings: int = 0
    messages: list[str] = field(default_factory=list)
    max_messages: int = 100

    def warn(self, message: str):
        self.warnings += 1
        if len(self.messages) < self.max_messages:
            self.messages.append(message)
        logger.log("CORPUS", message)


def parse_document(line: str, lineno: int, pair: Optional[LanguagePair] = None) -> Document:
    """Parse one JSONL line into a Document, raising CorpusFormatError on any schema violation."""
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise CorpusFormatError(f"line {lineno}: invalid JSON ({e.msg})")
    if not isinstance(record, dict):
        raise CorpusFormatError(f"line {lineno}: expected a JSON object")
    for key in ("id", "lang", "text"):
        if not isinstance(record.get(key), str):
            raise CorpusFormatError(f"line {lineno}: missing or non-string '{key}'")
    meta = record.get("meta", {})
    if not isinstance(meta, dict):
        raise CorpusFormatError(f"line {lineno}: 'meta' must be an object")
    if pair is not None and record["lang"] not in pair.languages:
        raise CorpusFormatError(f"line {lineno}: language '{record['lang']}' is not part of pair {pair.name}")
    try:
        return Document(record["id"], record["lang"], record["text"], meta)
    except CorpusModelError as e:
        raise CorpusFormatError(f"line {lineno}: {e}")


def decode_line(raw: bytes, lineno: int) -> str:
    try:
        return raw.decode("utf-8-sig" if lineno == 1 else "utf-8")
    except UnicodeDecodeError as e:
        raise CorpusFormatError(f"line {lineno}: invalid UTF-8 at byte {e.start}")


def read_corpus(
    path: Path,
    pair: Optional[LanguagePair] = None,
    strict: bool = False,
    report: Optional[IngestReport] = None,
) -> Iterator[Document]:
    """Yield documents in file order.

    Lenient mode skips malformed lines and duplicate ids, counting each in
    ``report``; strict mode raises on the first one.
    """
    report = report if report is not None else IngestReport()
    seen: set[str] = set()
    with open(path, "rb") as file:
        for lineno, raw in enumerate(file, start=1):
            if not raw.strip():
                continue
            try:
                doc = parse_document(decode_line(raw, lineno), lineno, pair)
                if doc.id in seen:
                    raise DuplicateDocumentError(f"line {lineno}: duplicate id '{doc.id}'")
            except CorpusFormatError as e:
                if strict:
                    raise
                report.warn(f"{path.name}: {e}")
                continue
            seen.add(doc.id)
            yield doc


def document_record(doc: Document) -> dict:
    return {"id": doc.id, "lang": doc.lang, "text": doc.text, "meta": doc.meta}


def dump_line(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n"


def write_corpus(docs: Iterable[Document], path: Path) -> int:
    """Write documents as JSONL with fixed key order; returns the record count."""
    count = 0
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as file:
        for doc in docs:
            file.write(dump_line(document_record(doc)))
            count += 1
    logger.log("CORPUS", f"Wrote {count} documents to {path}")
    return count


class CorpusIndex(Sequence[Document]):
    """Random access over a JSONL corpus that keeps only line offsets in memory."""

    def __init__(self, path: Path, pair: Optional[LanguagePair] = None, strict: bool = False,
                 report: Optional[IngestReport] = None):
        self.path = path
        self.pair = pair
        self.report = report if report is not None else IngestReport()
        # (byte offset, physical line number) of every accepted line
        self._offsets: list[tuple[int, int]] = []
        seen: set[str] = set()
        with open(path, "rb") as file:
            offset = 0
            for lineno, raw in enumerate(file, start=1):
                line_offset, offset = offset, offset + len(raw)
                if not raw.strip():
                    continue
                try:
                    doc = parse_document(decode_line(raw, lineno), lineno, pair)
                    if doc.id in seen:
                        raise DuplicateDocumentError(f"line {lineno}: duplicate id '{doc.id}'")
                except CorpusFormatError as e:
                    if strict:
                        raise
                    self.report.warn(f"{path.name}: {e}")
                    continue
                seen.add(doc.id)
                self._offsets.append((line_offset, lineno))
        logger.log("CORPUS", f"Indexed {len(self._offsets)} documents in {path}")

    def __len__(self) -> int:
        return len(self._offsets)

    @overload
    def __getitem__(self, index: int) -> Document: ...

    @overload
    def __getitem__(self, index: slice) -> list[Document]: ...

    def __getitem__(self, index):
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]
        offset, lineno = self._offsets[index]
        with open(self.path, "rb") as file:
            file.seek(offset)
            return parse_document(decode_line(file.readline(), lineno), lineno, self.pair)

    def __iter__(self) -> Iterator[Document]:
        return read_corpus(self.path, self.pair, strict=False, report=IngestReport())


def segment_record(segment: CsSegment, text: str) -> dict:
    record = {
        "span": list(segment.span.to_bytes(text)),
        "level": segment.level.value,
        "category": segment.category.value if segment.category else None,
    }
    if segment.partner_span is not None:
        record["partner_span"] = list(segment.partner_span.to_bytes(text))
    record["confidence"] = round(segment.confidence, 6)
    return record


def write_detections(results: Iterable[DetectedDocument], path: Path) -> int:
    """Write documents augmented with their ``segments``."""
    count = 0
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as file:
        for result in results:
            record = document_record(result.document)
            record["segments"] = [segment_record(s, result.document.text) for s in result.segments]
            file.write(dump_line(record))
            count += 1
    logger.log("CORPUS", f"Wrote {count} detected documents to {path}")
    return count


def read_detections(
    path: Path,
    pair: Optional[LanguagePair] = None,
    strict: bool = False,
    report: Optional[IngestReport] = None,
) -> Iterator[DetectedDocument]:
    """Read detection JSONL back into DetectedDocument records."""
    report = report if report is not None else IngestReport()
    with open(path, "rb") as file:
        for lineno, raw_line in enumerate(file, start=1):
            if not raw_line.strip():
                continue
            try:
                line = decode_line(raw_line, lineno)
                doc = parse_document(line, lineno, pair)
                segments = tuple(
                    _parse_segment(raw, doc) for raw in json.loads(line).get("segments", [])
                )
            except (CorpusFormatError, CorpusModelError, KeyError, TypeError, ValueError) as e:
                if strict:
                    raise CorpusFormatError(f"line {lineno}: {e}")
                report.warn(f"{path.name}: line {lineno}: {e}")
                continue
            yield DetectedDocument(doc, segments)


def _parse_segment(raw: dict, doc: Document) -> CsSegment:
    partner = raw.get("partner_span")
    return CsSegment(
        doc_id=doc.id,
        span=Span.from_bytes(doc.text, *raw["span"]),
        level=Level(raw["level"]),
        category=Category(raw["category"]) if raw.get("category") else None,
        partner_span=Span.from_bytes(doc.text, *partner) if partner else None,
        confidence=float(raw.get("confidence", 0.0)),
    )


def read_embeddings(path: Path) -> EmbeddingMatrix:
    """Decode an ``EMB1`` file into an n x d float32 matrix."""
    raw = Path(path).read_bytes()
    if len(raw) < EMBEDDING_HEADER.size:
        raise EmbeddingFormatError(f"{path}: truncated header")
    magic, n, d = EMBEDDING_HEADER.unpack_from(raw)
    if magic != EMBEDDING_MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic {magic!r}")
    expected = EMBEDDING_HEADER.size + 4 * n * d
    if len(raw) < expected:
        have = (len(raw) - EMBEDDING_HEADER.size) // 4
        raise EmbeddingFormatError(f"{path}: truncated payload, expected {n * d} floats, found {have}")
    if len(raw) > expected:
        raise EmbeddingFormatError(f"{path}: {len(raw) - expected} trailing bytes after payload")
    data = np.frombuffer(raw, dtype="<f4", count=n * d, offset=EMBEDDING_HEADER.size).reshape(n, d)
    try:
        return EmbeddingMatrix(data.astype(np.float32))
    except CorpusModelError as e:
        raise EmbeddingFormatError(f"{path}: {e}")


def write_embeddings(matrix: EmbeddingMatrix | np.ndarray, path: Path) -> None:
    data = matrix.data if isinstance(matrix, EmbeddingMatrix) else EmbeddingMatrix(np.asarray(matrix)).data
    n, d = data.shape
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as file:
        file.write(EMBEDDING_HEADER.pack(EMBEDDING_MAGIC, n, d))
        file.write(np.ascontiguousarray(data, dtype="<f4").tobytes())
