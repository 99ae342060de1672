from enum import Enum


class LanguageTag(str, Enum):
    PurePrimary = "pure-primary"
    PureSecondary = "pure-secondary"
    Mixed = "mixed"
    Other = "other"


class Level(str, Enum):
    SentenceLevel = "sentence"
    TokenLevel = "token"


class Category(str, Enum):
    Annotation = "annotation"
    Replacement = "replacement"
    Unrelated = "unrelated"


class Side(str, Enum):
    """Which language's documents a synthesis allocation modifies."""
    InPrimary = "primary"
    InSecondary = "secondary"


class CsType(str, Enum):
    SentAnnt = "sent-annt"
    SentRepl = "sent-repl"
    TokenAnnt = "token-annt"
    TokenRepl = "token-repl"

    @property
    def level(self) -> Level:
        return Level.SentenceLevel if self in (CsType.SentAnnt, CsType.SentRepl) else Level.TokenLevel

    @property
    def category(self) -> Category:
        return Category.Annotation if self in (CsType.SentAnnt, CsType.TokenAnnt) else Category.Replacement


class SizeUnit(str, Enum):
    documents = "documents"
    tokens = "tokens"


class MixPreset(str, Enum):
    Equal = "equal"
    Extreme = "extreme"
    EnReplEqual = "en-repl-equal"


class AblationMode(str, Enum):
    CsFree = "cs-free"
    Control = "control"
    Monolingual = "monolingual"


class ReportFormat(str, Enum):
    json = "json"
    csv = "csv"
    markdown = "markdown"


LANGUAGE_NAMES = {
    "en": "English",
    "zh": "Chinese",
    "bn": "Bengali",
    "ro": "Romanian",
    "ja": "Japanese",
}

# languages written without spaces between words
UNSPACED_LANGUAGES = frozenset({"zh", "ja"})


def language_name(code: str) -> str:
    return LANGUAGE_NAMES.get(code, code)
