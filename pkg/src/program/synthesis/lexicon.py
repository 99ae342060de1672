"""Bilingual lexicon with greedy longest-match term lookup.

The lexicon file is TSV with the columns ``src_term``, ``tgt_term`` and
``concept_id``. A header row with those names is optional. ``src_term`` is in
the pair's primary language and ``tgt_term`` in the secondary language.
"""
import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import regex

from program.corpus.models import Span
from program.types import UNSPACED_LANGUAGES
from program.utils.logging import logger

WORD = regex.compile(r"[\p{L}\p{M}\p{N}]+(?:['’\-][\p{L}\p{M}\p{N}]+)*")
HEADER = ("src_term", "tgt_term", "concept_id")


class LexiconError(Exception):
    """Raised for unreadable or inconsistent lexicon files"""


def normalize(term: str) -> str:
    return term.replace("’", "'").lower()


@dataclass(frozen=True, slots=True)
class LexiconEntry:
    src_term: str
    tgt_term: str
    concept_id: str


@dataclass(frozen=True, slots=True)
class TermMatch:
    span: Span
    entry: LexiconEntry

    def surface(self, text: str) -> str:
        return self.span.of(text)


class _TermIndex:
    """Longest-match index over one language's terms."""

    def __init__(self, terms: dict[str, LexiconEntry], char_level: bool):
        self.char_level = char_level
        if char_level:
            self.terms = terms
        else:
            self.terms = {" ".join(WORD.findall(normalize(t))): e for t, e in terms.items()}
            self.terms.pop("", None)
        self.max_len = max((len(k) if char_level else k.count(" ") + 1 for k in self.terms), default=0)

    def find(self, text: str) -> list[TermMatch]:
        return self._find_chars(text) if self.char_level else self._find_words(text)

    def _find_chars(self, text: str) -> list[TermMatch]:
        matches, i = [], 0
        while i < len(text):
            for length in range(min(self.max_len, len(text) - i), 0, -1):
                entry = self.terms.get(text[i:i + length])
                if entry is not None:
                    matches.append(TermMatch(Span(i, i + length), entry))
                    i += length
                    break
            else:
                i += 1
        return matches

    def _find_words(self, text: str) -> list[TermMatch]:
        words = list(WORD.finditer(text))
        matches, i = [], 0
        while i < len(words):
            for length in range(min(self.max_len, len(words) - i), 0, -1):
                run = words[i:i + length]
                # multi-word terms only match across plain whitespace
                if any(text[a.end():b.start()].strip() for a, b in zip(run, run[1:])):
                    continue
                entry = self.terms.get(" ".join(normalize(w.group()) for w in run))
                if entry is not None:
                    matches.append(TermMatch(Span(run[0].start(), run[-1].end()), entry))
                    i += length
                    break
            else:
                i += 1
        return matches


class Lexicon:
    """Bilingual term list for one language pair."""

    def __init__(self, entries: Iterable[LexiconEntry], src_lang: str = "en", tgt_lang: str = "zh"):
        self.src_lang = src_lang
        self.tgt_lang = tgt_lang
        self.entries = tuple(entries)
        src_terms: dict[str, LexiconEntry] = {}
        tgt_terms: dict[str, LexiconEntry] = {}
        for entry in self.entries:
            for terms, term in ((src_terms, entry.src_term), (tgt_terms, entry.tgt_term)):
                key = term if self._char_level(terms is tgt_terms) else normalize(term)
                if key in terms:
                    logger.warning(f"Lexicon term '{term}' listed twice, keeping concept {terms[key].concept_id}")
                    continue
                terms[key] = entry
        self._indexes = {
            src_lang: _TermIndex(src_terms, src_lang in UNSPACED_LANGUAGES),
            tgt_lang: _TermIndex(tgt_terms, tgt_lang in UNSPACED_LANGUAGES),
        }
        self.concepts = tuple(sorted({e.concept_id for e in self.entries}))
        self.concept_index = {c: i for i, c in enumerate(self.concepts)}

    def _char_level(self, target_side: bool) -> bool:
        return (self.tgt_lang if target_side else self.src_lang) in UNSPACED_LANGUAGES

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def load(cls, path: Path, src_lang: str = "en", tgt_lang: str = "zh") -> "Lexicon":
        entries = []
        with open(path, "r", encoding="utf-8", newline="") as file:
            for lineno, row in enumerate(csv.reader(file, delimiter="\t"), start=1):
                if not row or not "".join(row).strip() or row[0].startswith("#"):
                    continue
                if lineno == 1 and tuple(c.strip() for c in row) == HEADER:
                    continue
                if len(row) != 3 or not all(c.strip() for c in row):
                    raise LexiconError(f"{path}:{lineno}: expected 3 non-empty tab-separated columns")
                entries.append(LexiconEntry(*(c.strip() for c in row)))
        logger.log("SYNTH", f"Loaded {len(entries)} lexicon entries from {path}")
        return cls(entries, src_lang, tgt_lang)

    def find(self, text: str, lang: str) -> list[TermMatch]:
        """Non-overlapping longest matches, left to right."""
        try:
            return self._indexes[lang].find(text)
        except KeyError:
            raise LexiconError(f"Lexicon covers {self.src_lang}-{self.tgt_lang}, not '{lang}'")

    def translate(self, entry: LexiconEntry, to_lang: str) -> str:
        return entry.tgt_term if to_lang == self.tgt_lang else entry.src_term
