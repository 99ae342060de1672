"""Per-sentence language tagging."""
from abc import ABC, abstractmethod
from typing import Optional

import regex

from program.corpus.models import Document, LanguagePair, Sentence
from program.tagging.scripts import ScriptProfile, get_profile
from program.tagging.splitter import split_sentences
from program.types import LanguageTag
from program.utils.logging import logger


class SentenceClassifier(ABC):
    """Language identification backend for sentences the script counts cannot decide."""

    @abstractmethod
    def classify(self, text: str) -> tuple[str, float]:
        """Return ``(language code, confidence in [0, 1])``."""


RO_DIACRITICS = regex.compile(r"[ăâîșşțţĂÂÎȘŞȚŢ]")
WORD = regex.compile(r"\p{L}+")
RO_FUNCTION_WORDS = frozenset({
    "și", "si", "este", "sunt", "în", "din", "pe", "la", "cu", "care", "pentru", "nu",
    "să", "că", "mai", "fost", "sau", "dar", "iar", "acest", "această", "unei", "unui",
})
EN_FUNCTION_WORDS = frozenset({
    "the", "and", "is", "are", "of", "to", "that", "it", "for", "with", "as", "was",
    "on", "this", "be", "by", "from", "have", "has", "or", "which", "an",
})


class DiacriticHeuristicClassifier(SentenceClassifier):
    """Weak English/Romanian classifier from diacritics and function words.

    Each Romanian diacritic scores two points and each function word one.
    """

    def __init__(self, primary_lang: str = "en", secondary_lang: str = "ro"):
        self.primary_lang = primary_lang
        self.secondary_lang = secondary_lang

    def classify(self, text: str) -> tuple[str, float]:
        words = [w.lower() for w in WORD.findall(text)]
        ro = 2 * len(RO_DIACRITICS.findall(text)) + sum(w in RO_FUNCTION_WORDS for w in words)
        en = sum(w in EN_FUNCTION_WORDS for w in words)
        total = ro + en
        if total == 0:
            return self.primary_lang, 0.0
        if ro > en:
            return self.secondary_lang, ro / total
        return self.primary_lang, en / total


def profile_languages(profile: ScriptProfile) -> tuple[str, str]:
    primary, _, secondary = profile.name.partition("-")
    return primary, secondary


def tag_sentence_language(
    text: str,
    profile: ScriptProfile,
    fallback: Optional[SentenceClassifier] = None,
) -> LanguageTag:
    """Tag one sentence from its script counts; neutral characters are ignored."""
    counts = profile.count(text)
    p, s = counts.primary, counts.secondary
    if not profile.same_script:
        if p >= profile.min_chars and s == 0:
            return LanguageTag.PurePrimary
        if s >= profile.min_chars and p == 0:
            return LanguageTag.PureSecondary
        if p >= 1 and s >= 1:
            return LanguageTag.Mixed
    if fallback is not None and (not profile.same_script or p >= profile.min_chars):
        lang, _ = fallback.classify(text)
        primary_lang, secondary_lang = profile_languages(profile)
        if lang == primary_lang:
            return LanguageTag.PurePrimary
        if lang == secondary_lang:
            return LanguageTag.PureSecondary
    return LanguageTag.Other


def default_classifier(pair: LanguagePair, profile: ScriptProfile) -> Optional[SentenceClassifier]:
    """Same-script pairs get the diacritic heuristic; other pairs need none."""
    if profile.same_script:
        return DiacriticHeuristicClassifier(pair.primary_lang, pair.secondary_lang)
    return None


def tag_document(
    doc: Document,
    pair: LanguagePair,
    classifier: Optional[SentenceClassifier] = None,
    profile: Optional[ScriptProfile] = None,
) -> list[Sentence]:
    """Split a document and tag every sentence, in text order."""
    profile = profile or get_profile(pair.script_profile)
    classifier = classifier or default_classifier(pair, profile)
    sentences = [
        Sentence(span, tag_sentence_language(span.of(doc.text), profile, classifier))
        for span in split_sentences(doc, pair)
    ]
    logger.trace(f"Tagged {len(sentences)} sentences in {doc.id}")
    return sentences
