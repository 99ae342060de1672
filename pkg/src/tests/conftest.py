from pathlib import Path

import pytest
from kink import di

from program.corpus.io import read_corpus
from program.corpus.models import Document, LanguagePair
from program.detection.encoders import DictionaryEncoder
from program.synthesis.backends import BuiltinTokenCounter, DictionaryGenerator, DictionaryTranslator
from program.synthesis.lexicon import Lexicon
from program.utils.logging import logger

TEST_DATA = Path(__file__).parent / "test_data"

# every template uses its own lexicon concepts, so no two templates look like translations
EN_SENTENCES = (
    "The teacher reads a book in the library.",
    "My brother drinks green tea every morning.",
    "The train reaches the station at noon.",
    "Our family visits the museum on weekends.",
    "The doctor told him to sleep early.",
    "Children play football in the park.",
    "The restaurant serves delicious dumplings.",
    "The farmer grows rice and vegetables.",
    "Students finish their homework tonight.",
    "He forgot his umbrella at the office.",
    "A river runs through the city.",
    "A cold wind blew across the mountain.",
)

ZH_SENTENCES = (
    "老师在图书馆读书本。",
    "哥哥每天早上喝绿茶。",
    "火车中午到达车站。",
    "家人周末参观博物馆。",
    "孩子们在公园踢足球。",
    "农民种大米和蔬菜。",
)


@pytest.fixture(autouse=True)
def quiet_logs():
    logger.disable("program")
    yield
    logger.enable("program")


@pytest.fixture
def test_data() -> Path:
    return TEST_DATA


@pytest.fixture
def pair() -> LanguagePair:
    return LanguagePair.parse("en-zh")


@pytest.fixture
def lexicon_path() -> Path:
    return TEST_DATA / "lexicon_en_zh.tsv"


@pytest.fixture
def lexicon(lexicon_path) -> Lexicon:
    return Lexicon.load(lexicon_path, "en", "zh")


@pytest.fixture
def encoder(lexicon) -> DictionaryEncoder:
    return DictionaryEncoder(lexicon)


@pytest.fixture
def translator(lexicon) -> DictionaryTranslator:
    return DictionaryTranslator(lexicon)


@pytest.fixture
def generator(lexicon) -> DictionaryGenerator:
    return DictionaryGenerator(lexicon)


@pytest.fixture
def counter() -> BuiltinTokenCounter:
    return BuiltinTokenCounter()


@pytest.fixture
def cs_types(pair) -> list[Document]:
    return list(read_corpus(TEST_DATA / "cs_types.jsonl", pair))


@pytest.fixture
def en_templates() -> tuple[str, ...]:
    return EN_SENTENCES


@pytest.fixture
def zh_templates() -> tuple[str, ...]:
    return ZH_SENTENCES


def make_corpus(n: int, lang: str = "en", sentences_per_doc: int = 4, prefix: str = "doc") -> list[Document]:
    """Deterministic documents cycling through the sentence templates."""
    templates = EN_SENTENCES if lang == "en" else ZH_SENTENCES
    joiner = " " if lang == "en" else ""
    docs = []
    for i in range(n):
        picked = [templates[(i + k * 5) % len(templates)] for k in range(sentences_per_doc)]
        docs.append(Document(f"{prefix}-{lang}-{i:04d}", lang, joiner.join(picked), {"source": "fixture"}))
    return docs


@pytest.fixture
def en_corpus() -> list[Document]:
    return make_corpus(40, "en")


@pytest.fixture
def zh_corpus() -> list[Document]:
    return make_corpus(20, "zh", sentences_per_doc=3)


@pytest.fixture
def clean_di():
    """Snapshot of the dependency container, restored after the test."""
    from program.apis.chat_api import ChatAPI
    from program.detection.classifiers import TokenLevelClassifier
    from program.detection.encoders import CrossLingualEncoder
    from program.synthesis.backends import TokenCounter, TokenCsGenerator, Translator

    services = (Lexicon, ChatAPI, Translator, TokenCsGenerator, CrossLingualEncoder, TokenLevelClassifier, TokenCounter)
    saved = {s: di[s] for s in services if s in di}
    yield di
    for service in services:
        di[service] = saved.get(service)


@pytest.fixture
def corpus_factory():
    return make_corpus
