"""Translation, token-level generation and token counting backends."""
from abc import ABC, abstractmethod

import regex

from program.apis.chat_api import ChatAPI, ChatAPIError
from program.synthesis.lexicon import Lexicon, TermMatch
from program.synthesis.sft import generation_prompt
from program.types import Category, UNSPACED_LANGUAGES, language_name
from program.utils.request import RateLimitExceeded

TERMINAL_TO_CJK = {".": "。", "!": "！", "?": "？", ";": "；"}
TERMINAL_TO_LATIN = {v: k for k, v in TERMINAL_TO_CJK.items()}
TRAILING_TERMINAL = regex.compile(r"[.!?;。！？；]$")


class BackendError(Exception):
    """Raised when a backend cannot produce output for an input"""


class Translator(ABC):
    """Sentence translation; must be deterministic for a fixed input."""

    serial: bool = False

    @abstractmethod
    def translate(self, text: str, src_lang: str, tgt_lang: str) -> str:
        ...


class TokenCsGenerator(ABC):
    """Token-level code-switching generation."""

    serial: bool = False

    @abstractmethod
    def annotate(self, sentence: str, src_lang: str, tgt_lang: str) -> str:
        """Sentence with selected terms followed by their translation in brackets."""

    @abstractmethod
    def replace(self, sentence: str, src_lang: str, tgt_lang: str) -> str:
        """Sentence with selected terms replaced by their translation."""


class TokenCounter(ABC):
    """Counts the tokens of one language inside a text."""

    @abstractmethod
    def count(self, text: str, lang: str) -> int:
        ...


def is_subsequence(needle: str, haystack: str) -> bool:
    chars = iter(haystack)
    return all(c in chars for c in needle)


LATIN_WORD = regex.compile(r"\p{Latin}+(?:['’\-]\p{Latin}+)*")
HAN = regex.compile(r"\p{Han}")
JAPANESE = regex.compile(r"[\p{Han}\p{Hiragana}\p{Katakana}]")
BENGALI_RUN = regex.compile(r"[\p{Bengali}]+")
GRAPHEME = regex.compile(r"\X")


class BuiltinTokenCounter(TokenCounter):
    """Latin words, one token per CJK character, one per Bengali grapheme cluster.

    Counts are additive over concatenation except where a Latin word or a
    grapheme cluster straddles the boundary.
    """

    def count(self, text: str, lang: str) -> int:
        if not text:
            return 0
        if lang == "zh":
            return len(HAN.findall(text))
        if lang == "ja":
            return len(JAPANESE.findall(text))
        if lang == "bn":
            return sum(len(GRAPHEME.findall(run)) for run in BENGALI_RUN.findall(text))
        return len(LATIN_WORD.findall(text))


def _map_terminal(source: str, tgt_lang: str) -> str:
    match = TRAILING_TERMINAL.search(source.rstrip(" )）\"”’'"))
    if not match:
        return ""
    char = match.group()
    if tgt_lang in UNSPACED_LANGUAGES:
        return TERMINAL_TO_CJK.get(char, char)
    return TERMINAL_TO_LATIN.get(char, char)


class DictionaryTranslator(Translator):
    """Term-by-term lexicon translation.

    Known terms are translated in order and joined by single spaces; unknown
    words are dropped and the source's final punctuation is carried over.
    """

    def __init__(self, lexicon: Lexicon):
        self.lexicon = lexicon

    def translate(self, text: str, src_lang: str, tgt_lang: str) -> str:
        terms = [self.lexicon.translate(m.entry, tgt_lang) for m in self.lexicon.find(text, src_lang)]
        if not terms:
            raise BackendError(f"No lexicon term in {text[:40]!r}")
        return " ".join(terms) + _map_terminal(text, tgt_lang)


class DictionaryGenerator(TokenCsGenerator):
    """Annotates or replaces the longest lexicon terms of a sentence.

    ``k = max(1, round(term_density * matches))`` terms are edited.
    """

    def __init__(self, lexicon: Lexicon, term_density: float = 0.3):
        if not 0.0 < term_density <= 1.0:
            raise ValueError(f"term_density must be in (0, 1], got {term_density}")
        self.lexicon = lexicon
        self.term_density = term_density

    def _select(self, sentence: str, src_lang: str) -> list[TermMatch]:
        matches = self.lexicon.find(sentence, src_lang)
        if not matches:
            raise BackendError(f"No lexicon term in {sentence[:40]!r}")
        k = max(1, int(self.term_density * len(matches) + 0.5))
        chosen = sorted(matches, key=lambda m: (-len(m.span), m.span.start))[:k]
        return sorted(chosen, key=lambda m: m.span.start)

    def _edit(self, sentence: str, src_lang: str, tgt_lang: str, category: Category) -> str:
        pieces, cursor = [], 0
        for match in self._select(sentence, src_lang):
            translation = self.lexicon.translate(match.entry, tgt_lang)
            pieces.append(sentence[cursor:match.span.start])
            if category == Category.Annotation:
                gap = "" if src_lang in UNSPACED_LANGUAGES else " "
                pieces.append(f"{match.surface(sentence)}{gap}({translation})")
            else:
                pieces.append(translation)
            cursor = match.span.end
        pieces.append(sentence[cursor:])
        return "".join(pieces)

    def annotate(self, sentence: str, src_lang: str, tgt_lang: str) -> str:
        return self._edit(sentence, src_lang, tgt_lang, Category.Annotation)

    def replace(self, sentence: str, src_lang: str, tgt_lang: str) -> str:
        return self._edit(sentence, src_lang, tgt_lang, Category.Replacement)


TRANSLATE_PROMPT = (
    "Translate the following {src} sentence into {tgt}. Reply with the translation only.\n\n"
    "[{src} Sentence]: {text}"
)


def _ask(api: ChatAPI, prompt: str) -> str:
    try:
        return api.complete(prompt)
    except (ChatAPIError, RateLimitExceeded) as e:
        raise BackendError(str(e))


class RemoteTranslator(Translator):
    def __init__(self, api: ChatAPI):
        self.api = api

    def translate(self, text: str, src_lang: str, tgt_lang: str) -> str:
        return _ask(self.api, TRANSLATE_PROMPT.format(src=language_name(src_lang), tgt=language_name(tgt_lang), text=text))


class RemoteGenerator(TokenCsGenerator):
    """A fine-tuned generator served behind a chat endpoint, prompted with the source sentence only."""

    def __init__(self, api: ChatAPI):
        self.api = api

    def annotate(self, sentence: str, src_lang: str, tgt_lang: str) -> str:
        output = _ask(self.api, generation_prompt(Category.Annotation, src_lang, tgt_lang, sentence))
        if not is_subsequence(sentence, output):
            raise BackendError("Annotated output does not preserve the original sentence")
        return output

    def replace(self, sentence: str, src_lang: str, tgt_lang: str) -> str:
        return _ask(self.api, generation_prompt(Category.Replacement, src_lang, tgt_lang, sentence))
