"""Registers the configured backends in the dependency container."""
import os
from typing import TypeVar

from kink import di

from program.apis.chat_api import ChatAPI
from program.corpus.models import LanguagePair
from program.detection.classifiers import RemoteTokenClassifier, TokenLevelClassifier
from program.detection.encoders import CrossLingualEncoder, DictionaryEncoder
from program.settings.models import AppModel
from program.synthesis.backends import (
    BuiltinTokenCounter,
    DictionaryGenerator,
    DictionaryTranslator,
    RemoteGenerator,
    RemoteTranslator,
    TokenCounter,
    TokenCsGenerator,
    Translator,
)
from program.synthesis.lexicon import Lexicon
from program.utils.logging import logger

T = TypeVar("T")


class BackendConfigError(Exception):
    """Raised when a subcommand needs a backend the settings do not provide"""


def bootstrap_backends(settings: AppModel, pair: LanguagePair):
    # unconfigured services are registered as None so a rerun never sees stale ones
    for service in (Lexicon, ChatAPI, Translator, TokenCsGenerator, CrossLingualEncoder, TokenLevelClassifier):
        di[service] = None
    __setup_counter()
    __setup_lexicon(settings, pair)
    __setup_chat_api(settings)
    __setup_translator(settings)
    __setup_generator(settings)
    __setup_encoder()
    __setup_token_classifier(settings, pair)


def require(service: type[T], hint: str) -> T:
    if service not in di or di[service] is None:
        raise BackendConfigError(f"No {service.__name__} configured: {hint}")
    return di[service]


def __setup_counter():
    di[TokenCounter] = BuiltinTokenCounter()


def __setup_lexicon(settings: AppModel, pair: LanguagePair):
    if not settings.backends.lexicon:
        return
    di[Lexicon] = Lexicon.load(settings.backends.lexicon, pair.primary_lang, pair.secondary_lang)


def __setup_chat_api(settings: AppModel):
    backends = settings.backends
    if not backends.needs_remote:
        return
    if not backends.endpoint or not backends.model:
        raise BackendConfigError("Remote backends need backends.endpoint and backends.model")
    api_key = os.getenv(backends.api_key_env)
    if not api_key:
        logger.warning(f"{backends.api_key_env} is not set, calling {backends.endpoint} without credentials")
    di[ChatAPI] = ChatAPI(
        backends.endpoint,
        backends.model,
        api_key=api_key,
        timeout=backends.timeout,
        retries=backends.retries,
        backoff_factor=backends.backoff_factor,
        requests_per_minute=backends.requests_per_minute,
    )
    logger.log("BACKEND", f"Remote model {backends.model} at {backends.endpoint}")


def __setup_translator(settings: AppModel):
    if settings.backends.translator == "remote":
        di[Translator] = RemoteTranslator(di[ChatAPI])
    elif di[Lexicon] is not None:
        di[Translator] = DictionaryTranslator(di[Lexicon])


def __setup_generator(settings: AppModel):
    if settings.backends.generator == "remote":
        di[TokenCsGenerator] = RemoteGenerator(di[ChatAPI])
    elif di[Lexicon] is not None:
        di[TokenCsGenerator] = DictionaryGenerator(di[Lexicon], settings.synthesis.term_density)


def __setup_encoder():
    if di[Lexicon] is not None:
        di[CrossLingualEncoder] = DictionaryEncoder(di[Lexicon])


def __setup_token_classifier(settings: AppModel, pair: LanguagePair):
    if settings.backends.token_classifier == "remote":
        di[TokenLevelClassifier] = RemoteTokenClassifier(di[ChatAPI], pair)


def optional(service: type[T]) -> T | None:
    return di[service] if service in di else None
