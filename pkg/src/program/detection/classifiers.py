"""Token-level code-switching classifiers."""
from abc import ABC, abstractmethod

import regex

from program.apis.chat_api import ChatAPI, ChatAPIError
from program.corpus.models import LanguagePair
from program.types import Category, language_name
from program.utils.request import RateLimitExceeded


class ClassifierError(Exception):
    """Raised when a classifier backend fails or replies unparseably"""


class TokenLevelClassifier(ABC):
    """Decides whether a token-level segment annotates or replaces."""

    # backends that cannot take concurrent calls set this; the detector then serializes them
    serial: bool = False

    @abstractmethod
    def classify(self, segment: str, sentence: str) -> tuple[Category, float]:
        ...

    def is_unrelated(self, segment: str, sentence: str) -> bool:
        """Optional second opinion for the unrelated screen."""
        return False


CLASSIFY_PROMPT = """Code-switching can be classified more finely according to different characteristics and uses. Here are some common types:

1. Annotation: In this case, another language is used to explain or define a noun before or after it. For example: During the festival, we watched a dragon dance (舞龙). In this sentence, the word "舞龙" serves as an annotation for "dragon dance".

2. Replacement: A specific word is replaced by a foreign word. For example: During the festival, we watched a 舞龙. In this sentence, the word "舞龙" replaces the English word "dragon dance".

Given {a_lang_article} {host} sentence containing {guest} code-switching, please classify the sentence according to the above two types.

Examples:

[English Sentence]: During the festival, we watched a dragon dance (舞龙), which is a traditional Chinese performance.

[Answer]: "舞龙" appears after "dragon dance", which explains this English word in Chinese and is its annotation. Formatting result: \\\\box(1)

[English Sentence]: We enjoyed some delicious food at a nearby 茶馆.

[Answer]: The word "茶馆" is directly used as part of the sentence. It can be assumed that the original word is "teahouse", but it is directly replaced by "茶馆". Formatting result: \\\\box(2)

The following is your task. You can do a brief analysis, but please be sure to output it in the format of the example at the end.

[{host} Sentence]: {sentence}

[Answer]:"""

UNRELATED_PROMPT = """A {host} sentence contains the foreign segment "{segment}".
Decide whether the segment is genuine {guest} code-switching, or unrelated material such as text in a third language, garbled characters or markup debris.

[{host} Sentence]: {sentence}

Answer with \\\\box(1) if the segment is unrelated, or \\\\box(2) if it is genuine code-switching."""

BOX = regex.compile(r"box\s*\(\s*([12])\s*\)")


def parse_box(reply: str) -> int:
    """The last ``box(n)`` verdict in a reply."""
    found = BOX.findall(reply)
    if not found:
        raise ClassifierError(f"No box(n) verdict in reply: {reply[:80]!r}")
    return int(found[-1])


class RemoteTokenClassifier(TokenLevelClassifier):
    """Asks a chat model to classify with a fixed few-shot prompt."""

    def __init__(self, api: ChatAPI, pair: LanguagePair, host_lang: str | None = None):
        self.api = api
        self.pair = pair
        self.host_lang = host_lang or pair.primary_lang

    def _names(self, host_lang: str) -> tuple[str, str]:
        return language_name(host_lang), language_name(self.pair.other(host_lang))

    def for_host(self, host_lang: str) -> "RemoteTokenClassifier":
        return RemoteTokenClassifier(self.api, self.pair, host_lang)

    def _ask(self, prompt: str) -> int:
        try:
            return parse_box(self.api.complete(prompt))
        except (ChatAPIError, RateLimitExceeded) as e:
            raise ClassifierError(str(e))

    def classify(self, segment: str, sentence: str) -> tuple[Category, float]:
        host, guest = self._names(self.host_lang)
        article = "an" if host[:1].upper() in "AEIOU" else "a"
        verdict = self._ask(CLASSIFY_PROMPT.format(a_lang_article=article, host=host, guest=guest, sentence=sentence))
        return (Category.Annotation if verdict == 1 else Category.Replacement), 1.0

    def is_unrelated(self, segment: str, sentence: str) -> bool:
        host, guest = self._names(self.host_lang)
        return self._ask(UNRELATED_PROMPT.format(host=host, guest=guest, segment=segment, sentence=sentence)) == 1
