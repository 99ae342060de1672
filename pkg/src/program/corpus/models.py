"""Core corpus records shared by every pipeline."""
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np

from program.types import Category, LanguageTag, Level


class CorpusModelError(ValueError):
    """Raised when a record violates its invariants"""


@dataclass(frozen=True, slots=True)
class LanguagePair:
    primary_lang: str
    secondary_lang: str
    script_profile: str

    def __post_init__(self):
        if self.primary_lang == self.secondary_lang:
            raise CorpusModelError(f"Language pair needs two languages, got {self.primary_lang} twice")
        from program.tagging.scripts import is_registered
        if not is_registered(self.script_profile):
            raise CorpusModelError(f"Script profile '{self.script_profile}' is not registered")

    @classmethod
    def parse(cls, value: str) -> "LanguagePair":
        """Build a pair from its profile name, e.g. ``en-zh``."""
        try:
            primary, secondary = value.split("-", 1)
        except ValueError:
            raise CorpusModelError(f"Language pair must look like 'en-zh', got '{value}'")
        return cls(primary, secondary, value)

    @property
    def name(self) -> str:
        return f"{self.primary_lang}-{self.secondary_lang}"

    @property
    def languages(self) -> tuple[str, str]:
        return self.primary_lang, self.secondary_lang

    def other(self, lang: str) -> str:
        if lang == self.primary_lang:
            return self.secondary_lang
        if lang == self.secondary_lang:
            return self.primary_lang
        raise CorpusModelError(f"Language '{lang}' is not part of pair {self.name}")

    def is_primary(self, lang: str) -> bool:
        self.other(lang)
        return lang == self.primary_lang


@dataclass(frozen=True, slots=True, order=True)
class Span:
    """Half-open [start, end) interval of code-point offsets into a document's text."""
    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.start >= self.end:
            raise CorpusModelError(f"Invalid span [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def of(self, text: str) -> str:
        return text[self.start:self.end]

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end

    def to_bytes(self, text: str) -> tuple[int, int]:
        """UTF-8 byte offsets of this span, the serialized form."""
        start = len(text[:self.start].encode("utf-8"))
        return start, start + len(text[self.start:self.end].encode("utf-8"))

    @classmethod
    def from_bytes(cls, text: str, start: int, end: int) -> "Span":
        """Inverse of ``to_bytes``; rejects offsets that split a code point."""
        raw = text.encode("utf-8")
        if not 0 <= start < end <= len(raw):
            raise CorpusModelError(f"Byte span [{start}, {end}) outside text of {len(raw)} bytes")
        try:
            prefix = raw[:start].decode("utf-8")
            body = raw[start:end].decode("utf-8")
        except UnicodeDecodeError:
            raise CorpusModelError(f"Byte span [{start}, {end}) is not on code point boundaries")
        return cls(len(prefix), len(prefix) + len(body))


@dataclass(frozen=True, slots=True)
class Document:
    id: str
    lang: str
    text: str
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise CorpusModelError("Document id must be a non-empty string")
        if not self.text.strip():
            raise CorpusModelError(f"Document {self.id} has empty text")

    def with_text(self, text: str) -> "Document":
        return replace(self, text=text)


@dataclass(frozen=True, slots=True)
class Sentence:
    span: Span
    tag: Optional[LanguageTag] = None

    def text(self, doc_text: str) -> str:
        return self.span.of(doc_text)


@dataclass(frozen=True, slots=True)
class CsSegment:
    doc_id: str
    span: Span
    level: Level
    category: Optional[Category] = None
    partner_span: Optional[Span] = None
    confidence: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise CorpusModelError(f"Confidence {self.confidence} outside [0, 1]")
        if (self.category == Category.Annotation) != (self.partner_span is not None):
            raise CorpusModelError("An annotation segment carries a partner span, and only annotations do")
        if self.partner_span is not None and self.partner_span.overlaps(self.span):
            raise CorpusModelError("Partner span overlaps the segment")

    @property
    def type_key(self) -> str:
        """Distribution key, e.g. ``token-annt``; unrelated segments share one key."""
        if self.category is None:
            raise CorpusModelError("Segment has no category yet")
        if self.category == Category.Unrelated:
            return "unrelated"
        level = "sent" if self.level == Level.SentenceLevel else "token"
        kind = "annt" if self.category == Category.Annotation else "repl"
        return f"{level}-{kind}"

    def classified(self, category: Category, confidence: float, partner_span: Optional[Span] = None) -> "CsSegment":
        return replace(self, category=category, confidence=min(max(confidence, 0.0), 1.0), partner_span=partner_span)


@dataclass(frozen=True)
class EmbeddingMatrix:
    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise CorpusModelError(f"Embedding matrix must be n x d with n, d >= 1, got shape {self.data.shape}")
        bad = np.argwhere(~np.isfinite(self.data))
        if len(bad):
            row, col = bad[0]
            raise CorpusModelError(f"Non-finite embedding value at row {row}, column {col}")

    @property
    def n(self) -> int:
        return int(self.data.shape[0])

    @property
    def d(self) -> int:
        return int(self.data.shape[1])


@dataclass(frozen=True, slots=True)
class DetectedDocument:
    """A document together with its classified code-switching segments."""
    document: Document
    segments: tuple[CsSegment, ...] = ()
    error: Optional[str] = None

    @property
    def has_related_cs(self) -> bool:
        return any(s.category != Category.Unrelated for s in self.segments)
