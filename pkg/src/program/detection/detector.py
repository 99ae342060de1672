"""Code-switching detection.

A document is tagged sentence by sentence. Sentences wholly in the other
language become sentence-level segments; runs of other-language characters
inside mixed sentences become token-level segments. Each segment is screened
for unrelated material first and then classified as an annotation or a
replacement.
"""
from contextlib import nullcontext
from threading import Lock
from typing import Iterable, Iterator, NamedTuple, Optional

import regex
from pydantic import BaseModel

from program.corpus.models import CsSegment, DetectedDocument, Document, LanguagePair, Sentence, Span
from program.detection.classifiers import ClassifierError, TokenLevelClassifier
from program.detection.encoders import CrossLingualEncoder, EncoderError, cosine
from program.settings.models import DetectorConfig
from program.tagging.scripts import CharClass, ScriptProfile, get_profile, with_min_chars
from program.tagging.tagger import SentenceClassifier, tag_document
from program.types import Category, LanguageTag, Level
from program.utils import ordered_map
from program.utils.logging import logger

OPENERS = frozenset("(（[【")
CLOSERS = frozenset(")）]】")
GARBLE_SYMBOLS = frozenset("$%^&*{}<>|\\~`=+_@#")
# CJK, kana, Bengali and CJK punctuation are clean text that needs no spaces
CLEAN_UNSPACED = regex.compile(r"[\p{Han}\p{Hiragana}\p{Katakana}\p{Bengali}\u3000-\u303F\uFF01-\uFF60]")
EDGE_PUNCTUATION = regex.compile(r"^\p{P}+|\p{P}+$")
PARTNER_STOP = regex.compile(r"[\p{P}--['’\-]]", regex.V1)
SIMILARITY_EPSILON = 1e-9

HEURISTIC_ANNOTATION_CONFIDENCE = 0.9
HEURISTIC_REPLACEMENT_CONFIDENCE = 0.7
UNRELATED_CONFIDENCE = 1.0


class DetectionError(Exception):
    """Raised when a document cannot be run through detection"""


def _sides(doc: Document, pair: LanguagePair) -> tuple[LanguageTag, LanguageTag, CharClass, CharClass]:
    """(own tag, foreign tag, own char class, foreign char class) for a document."""
    try:
        primary = pair.is_primary(doc.lang)
    except ValueError:
        raise DetectionError(f"{doc.id}: language '{doc.lang}' is not part of pair {pair.name}")
    if primary:
        return LanguageTag.PurePrimary, LanguageTag.PureSecondary, CharClass.Primary, CharClass.Secondary
    return LanguageTag.PureSecondary, LanguageTag.PurePrimary, CharClass.Secondary, CharClass.Primary


def token_runs(text: str, sentence: Span, profile: ScriptProfile, foreign: CharClass) -> list[Span]:
    """Maximal runs of foreign-script characters inside one sentence.

    A run continues across a gap of foreign-side punctuation (、，) plus at most
    one other neutral character when a foreign character follows the gap.
    Other-script characters (kana) always count as foreign.
    """
    bridge_free = CharClass.SecondaryNeutral if foreign == CharClass.Secondary else None

    def is_foreign(cls: CharClass) -> bool:
        return cls == foreign or cls == CharClass.OtherScript

    classes = [profile.char_class(c) for c in sentence.of(text)]
    runs: list[Span] = []
    i, n = 0, len(classes)
    while i < n:
        if not is_foreign(classes[i]):
            i += 1
            continue
        start = end = i
        j = i
        while j < n:
            if is_foreign(classes[j]):
                end = j
                j += 1
                continue
            k, neutrals = j, 0
            while k < n and not is_foreign(classes[k]):
                if classes[k] == bridge_free:
                    pass
                elif classes[k] in (CharClass.Neutral, CharClass.SecondaryNeutral):
                    neutrals += 1
                else:
                    neutrals = 2
                if neutrals > 1:
                    break
                k += 1
            if k < n and is_foreign(classes[k]) and neutrals <= 1:
                j = k
                continue
            break
        runs.append(Span(sentence.start + start, sentence.start + end + 1))
        i = end + 1
    return runs


def other_script_share(text: str, profile: ScriptProfile) -> float:
    """Other-script characters (kana for en-zh) over all tracked letters."""
    counts = profile.count(text)
    return counts.other_script / counts.letters if counts.letters else 0.0


def detect_segments(
    doc: Document,
    sentences: list[Sentence],
    pair: LanguagePair,
    profile: Optional[ScriptProfile] = None,
    other_script_ratio: Optional[float] = None,
) -> list[CsSegment]:
    """Unclassified segments in text order.

    With ``other_script_ratio`` set, host-language or untagged sentences
    dominated by a third script (Japanese inside Chinese text) also become
    sentence-level candidates, so the unrelated screen can see them.
    """
    profile = profile or get_profile(pair.script_profile)
    own_tag, foreign_tag, _, foreign_cls = _sides(doc, pair)
    segments: list[CsSegment] = []
    for sentence in sentences:
        if sentence.span.end > len(doc.text):
            raise DetectionError(f"{doc.id}: sentence span {sentence.span} lies outside the text")
        if sentence.tag == foreign_tag:
            segments.append(CsSegment(doc.id, sentence.span, Level.SentenceLevel))
        elif sentence.tag == LanguageTag.Mixed:
            segments.extend(
                CsSegment(doc.id, span, Level.TokenLevel) for span in token_runs(doc.text, sentence.span, profile, foreign_cls)
            )
        elif other_script_ratio is not None and sentence.tag in (own_tag, LanguageTag.Other):
            share = other_script_share(sentence.span.of(doc.text), profile)
            if share and share >= other_script_ratio:
                segments.append(CsSegment(doc.id, sentence.span, Level.SentenceLevel))
    return segments


def garble_ratio(text: str) -> float:
    """Share of non-space characters that look like symbol debris or garbled tokens.

    Whitespace-separated tokens (with CJK, kana and Bengali text acting as
    clean separators) whose punctuation-stripped core mixes letters with digits
    or symbols count entirely; letterless tokens count their digits and
    symbols; other tokens count only their symbols.
    """
    total = sum(1 for c in text if not c.isspace())
    if total == 0:
        return 0.0
    garbled = 0
    for token in CLEAN_UNSPACED.sub(" ", text).split():
        core = EDGE_PUNCTUATION.sub("", token)
        has_letter = any(c.isalpha() for c in core)
        if has_letter and any(c.isdigit() or c in GARBLE_SYMBOLS for c in core):
            garbled += len(token)
        elif not has_letter:
            garbled += sum(1 for c in token if c.isdigit() or c in GARBLE_SYMBOLS)
        else:
            garbled += sum(1 for c in token if c in GARBLE_SYMBOLS)
    return garbled / total


def screen_unrelated(
    segment: CsSegment,
    doc: Document,
    cfg: DetectorConfig,
    profile: ScriptProfile,
    context: Optional[Span] = None,
) -> bool:
    """True when the segment is third-script or garbled material.

    The other-script share is measured on the segment; the garble share on
    ``context`` (the enclosing sentence for token segments).
    """
    if other_script_share(segment.span.of(doc.text), profile) >= cfg.unrelated_other_script_ratio:
        return True
    return garble_ratio((context or segment.span).of(doc.text)) >= cfg.unrelated_symbol_ratio


def classify_sentence_segment(
    segment: CsSegment,
    sentences: list[Sentence],
    doc: Document,
    encoder: CrossLingualEncoder,
    cfg: DetectorConfig,
    own_tag: LanguageTag,
) -> CsSegment:
    """Annotation when a nearby own-language sentence is a translation of the segment."""
    index = next((i for i, s in enumerate(sentences) if s.span == segment.span), None)
    if index is None:
        raise DetectionError(f"{doc.id}: segment {segment.span} is not one of the document's sentences")
    window = cfg.alignment_window
    candidates = [
        s for j, s in enumerate(sentences)
        if j != index and abs(j - index) <= window and s.tag == own_tag
    ]
    if not candidates:
        return segment.classified(Category.Replacement, 1.0)
    try:
        vector = encoder.embed(segment.span.of(doc.text))
        similarities = [cosine(vector, encoder.embed(s.span.of(doc.text))) for s in candidates]
    except EncoderError as e:
        raise DetectionError(f"{doc.id}: encoder failed: {e}")
    best = max(range(len(similarities)), key=lambda k: (similarities[k], -k))
    similarity = similarities[best]
    if similarity + SIMILARITY_EPSILON >= cfg.annt_similarity_threshold:
        return segment.classified(Category.Annotation, similarity, candidates[best].span)
    return segment.classified(Category.Replacement, 1.0 - similarity)


def _partner_before(text: str, sentence: Span, index: int, profile: ScriptProfile, own: CharClass) -> Optional[Span]:
    """Own-language run ending before ``index``, back to punctuation, foreign text or sentence start."""
    end = index
    while end > sentence.start and text[end - 1].isspace():
        end -= 1
    start = end
    while start > sentence.start:
        char = text[start - 1]
        cls = profile.char_class(char)
        if cls not in (own, CharClass.Neutral) or PARTNER_STOP.match(char):
            break
        start -= 1
    while start < end and text[start].isspace():
        start += 1
    if start >= end or not any(profile.char_class(c) == own for c in text[start:end]):
        return None
    return Span(start, end)


def _partner_after(text: str, sentence: Span, index: int, profile: ScriptProfile, own: CharClass) -> Optional[Span]:
    start = index
    while start < sentence.end and (text[start].isspace() or text[start] in CLOSERS):
        start += 1
    end = start
    while end < sentence.end:
        char = text[end]
        cls = profile.char_class(char)
        if cls not in (own, CharClass.Neutral) or PARTNER_STOP.match(char):
            break
        end += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    if start >= end or not any(profile.char_class(c) == own for c in text[start:end]):
        return None
    return Span(start, end)


def _enclosing_brackets(text: str, segment: Span, sentence: Span) -> Optional[int]:
    """Index of the opener when the segment sits alone inside brackets."""
    before = segment.start
    while before > sentence.start and text[before - 1].isspace():
        before -= 1
    after = segment.end
    while after < sentence.end and text[after].isspace():
        after += 1
    if before > sentence.start and text[before - 1] in OPENERS and after < sentence.end and text[after] in CLOSERS:
        return before - 1
    return None


def heuristic_token_verdict(
    segment: CsSegment, doc: Document, sentence: Span, profile: ScriptProfile, own: CharClass
) -> CsSegment:
    """Bracketed segment right after own-language content annotates it; anything else replaces."""
    opener = _enclosing_brackets(doc.text, segment.span, sentence)
    if opener is not None:
        partner = _partner_before(doc.text, sentence, opener, profile, own)
        if partner is not None:
            return segment.classified(Category.Annotation, HEURISTIC_ANNOTATION_CONFIDENCE, partner)
    return segment.classified(Category.Replacement, HEURISTIC_REPLACEMENT_CONFIDENCE)


def classify_token_segment(
    segment: CsSegment,
    doc: Document,
    sentence: Span,
    profile: ScriptProfile,
    own: CharClass,
    classifier: Optional[TokenLevelClassifier] = None,
) -> tuple[CsSegment, bool]:
    """Classify a token segment; returns the segment and whether the backend degraded."""
    heuristic = heuristic_token_verdict(segment, doc, sentence, profile, own)
    if classifier is None:
        return heuristic, False
    try:
        category, confidence = classifier.classify(segment.span.of(doc.text), sentence.of(doc.text))
    except ClassifierError as e:
        logger.warning(f"{doc.id}: token classifier failed, using heuristic: {e}")
        return heuristic, True
    if category == Category.Annotation:
        partner = heuristic.partner_span or _partner_before(doc.text, sentence, segment.span.start, profile, own) \
            or _partner_after(doc.text, sentence, segment.span.end, profile, own)
        if partner is None:
            logger.debug(f"{doc.id}: classifier said annotation but no partner text exists, keeping heuristic")
            return heuristic, False
        return segment.classified(Category.Annotation, confidence, partner), False
    return segment.classified(category, confidence), False


class DetectionOutcome(NamedTuple):
    result: DetectedDocument
    degraded_calls: int = 0


class DetectionReport(BaseModel):
    documents: int = 0
    documents_with_segments: int = 0
    segments: int = 0
    failed: int = 0
    degraded: bool = False
    degraded_calls: int = 0
    errors: list[dict[str, str]] = []
    max_errors: int = 100

    def record(self, outcome: DetectionOutcome):
        self.documents += 1
        self.segments += len(outcome.result.segments)
        self.documents_with_segments += bool(outcome.result.segments)
        if outcome.degraded_calls:
            self.degraded = True
            self.degraded_calls += outcome.degraded_calls
        if outcome.result.error:
            self.failed += 1
            if len(self.errors) < self.max_errors:
                self.errors.append({"id": outcome.result.document.id, "error": outcome.result.error})


class Detector:
    """Immutable detection pipeline for one language pair."""

    def __init__(
        self,
        pair: LanguagePair,
        encoder: CrossLingualEncoder,
        classifier: Optional[TokenLevelClassifier] = None,
        cfg: Optional[DetectorConfig] = None,
        sentence_classifier: Optional[SentenceClassifier] = None,
        profile: Optional[ScriptProfile] = None,
        min_chars: Optional[int] = None,
        strict: bool = False,
    ):
        self.pair = pair
        self.encoder = encoder
        self.classifier = classifier
        self.cfg = cfg or DetectorConfig()
        self.sentence_classifier = sentence_classifier
        profile = profile or get_profile(pair.script_profile)
        self.profile = with_min_chars(profile, min_chars) if min_chars else profile
        self.strict = strict
        self._backend_guard = Lock() if classifier is not None and classifier.serial else nullcontext()

    def _classifier_for(self, doc: Document) -> Optional[TokenLevelClassifier]:
        for_host = getattr(self.classifier, "for_host", None)
        return for_host(doc.lang) if for_host else self.classifier

    def detect(self, doc: Document) -> tuple[list[Sentence], list[CsSegment], int]:
        """Tag, segment, screen and classify one document."""
        own_tag, _, own_cls, _ = _sides(doc, self.pair)
        if self.cfg.character_prefilter and not (
            self.profile.has_both_scripts(doc.text) or self.profile.has_other_script(doc.text)
        ):
            return [], [], 0
        sentences = tag_document(doc, self.pair, self.sentence_classifier, self.profile)
        classifier = self._classifier_for(doc)
        degraded = 0
        classified: list[CsSegment] = []
        other_ratio = self.cfg.unrelated_other_script_ratio
        for segment in detect_segments(doc, sentences, self.pair, self.profile, other_ratio):
            if segment.level == Level.SentenceLevel:
                context = segment.span
            else:
                context = next(s.span for s in sentences if s.span.start <= segment.span.start < s.span.end)
            if screen_unrelated(segment, doc, self.cfg, self.profile, context) or (
                self.cfg.remote_unrelated_screen and self._remote_unrelated(classifier, segment, doc, context)
            ):
                classified.append(segment.classified(Category.Unrelated, UNRELATED_CONFIDENCE))
                continue
            if segment.level == Level.SentenceLevel:
                classified.append(classify_sentence_segment(segment, sentences, doc, self.encoder, self.cfg, own_tag))
            else:
                with self._backend_guard:
                    result, failed = classify_token_segment(segment, doc, context, self.profile, own_cls, classifier)
                degraded += failed
                classified.append(result)
        return sentences, classified, degraded

    def _remote_unrelated(self, classifier, segment: CsSegment, doc: Document, context: Span) -> bool:
        if classifier is None:
            return False
        try:
            with self._backend_guard:
                return classifier.is_unrelated(segment.span.of(doc.text), context.of(doc.text))
        except ClassifierError as e:
            logger.warning(f"{doc.id}: remote unrelated screen failed: {e}")
            return False

    def run(self, doc: Document) -> DetectionOutcome:
        """``detect`` with per-document errors captured instead of raised (unless strict)."""
        try:
            _, segments, degraded = self.detect(doc)
        except DetectionError as e:
            if self.strict:
                raise
            logger.error(str(e))
            return DetectionOutcome(DetectedDocument(doc, (), str(e)))
        return DetectionOutcome(DetectedDocument(doc, tuple(segments)), degraded)


def detect_corpus(
    corpus: Iterable[Document],
    pair: LanguagePair,
    encoder: CrossLingualEncoder,
    classifier: Optional[TokenLevelClassifier] = None,
    cfg: Optional[DetectorConfig] = None,
    threads: int = 1,
    report: Optional[DetectionReport] = None,
    detector: Optional[Detector] = None,
) -> Iterator[DetectedDocument]:
    """Detect every document, yielding results in input order for any thread count."""
    detector = detector or Detector(pair, encoder, classifier, cfg)
    report = report if report is not None else DetectionReport()
    for outcome in ordered_map(detector.run, corpus, threads):
        report.record(outcome)
        yield outcome.result
    logger.log("DETECT", f"Detected {report.segments} segments in {report.documents} documents")
