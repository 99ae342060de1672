"""Synthetic code-switching under a new-token budget.

Documents of one language are visited in a seeded order. In each eligible
document a seeded sample of pure sentences is rewritten into one of the four
code-switching types. Edits are proposed per document (optionally in
parallel) and committed strictly in visiting order, so the result does not
depend on the thread count. A budget-driven run stops before the first edit
once the opposite-language tokens added so far reach the budget.
"""
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from typing import Optional

import regex
from pydantic import BaseModel, Field, model_validator

from program.corpus.models import Document, LanguagePair, Span
from program.synthesis.backends import BackendError, TokenCounter, TokenCsGenerator, Translator
from program.tagging.tagger import tag_document
from program.types import CsType, LanguageTag, Side, UNSPACED_LANGUAGES
from program.utils import hash64, ordered_map
from program.utils.logging import logger
from program.utils.sampling import Xoshiro256

DEFAULT_CAPS = {Side.InPrimary: 0.2, Side.InSecondary: 1.0}
SECONDARY_DENSITY_WARNING = 0.6
# inserted text ending in one of these needs no separating space in an unspaced host
UNSPACED_TAIL = regex.compile(r"[\p{Han}\p{Hiragana}\p{Katakana}\u3000-\u303F\uFF01-\uFF60]$")


class SynthesisPlan(BaseModel):
    side: Side
    cs_type: CsType
    token_budget: Optional[int] = Field(None, ge=0)  # None: density-driven, no stop
    sentence_density: float = Field(0.5, ge=0.0, le=1.0)
    doc_eligibility_cap: Optional[float] = Field(None, ge=0.0, le=1.0)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def check_driver(self):
        if self.token_budget is not None and self.token_budget > 0 and self.sentence_density == 0.0:
            raise ValueError("a positive token budget cannot be reached with sentence_density 0")
        return self

    @property
    def cap(self) -> float:
        return DEFAULT_CAPS[self.side] if self.doc_eligibility_cap is None else self.doc_eligibility_cap

    @property
    def budget_driven(self) -> bool:
        return self.token_budget is not None

    def languages(self, pair: LanguagePair) -> tuple[str, str]:
        """(language of modified documents, language of inserted material)."""
        if self.side == Side.InPrimary:
            return pair.primary_lang, pair.secondary_lang
        return pair.secondary_lang, pair.primary_lang


class AccountingReport(BaseModel):
    allocation: str
    token_budget: Optional[int] = None
    docs_eligible: int = 0
    docs_touched: int = 0
    sentences_modified: int = 0
    tokens_added_by_lang: dict[str, int] = {}
    tokens_removed_by_lang: dict[str, int] = {}
    budget_tokens: int = 0
    max_sentence_delta: int = 0
    failures: int = 0
    shortfall: int = 0
    warnings: list[str] = []

    def add_counts(self, added: dict[str, int], removed: dict[str, int]):
        for lang, value in added.items():
            self.tokens_added_by_lang[lang] = self.tokens_added_by_lang.get(lang, 0) + value
        for lang, value in removed.items():
            self.tokens_removed_by_lang[lang] = self.tokens_removed_by_lang.get(lang, 0) + value

    def summary(self) -> dict:
        return {
            "docs_touched": self.docs_touched,
            "sentences_modified": self.sentences_modified,
            "tokens_added_by_lang": dict(sorted(self.tokens_added_by_lang.items())),
            "tokens_removed_by_lang": dict(sorted(self.tokens_removed_by_lang.items())),
            "failures": self.failures,
        }


@dataclass(frozen=True)
class SentenceEdit:
    span: Span
    text: str
    added: dict[str, int]
    removed: dict[str, int]
    budget_delta: int


@dataclass
class Proposal:
    document: Document
    edits: list[SentenceEdit] = field(default_factory=list)
    failures: int = 0


@dataclass
class SynthesisResult:
    replacements: dict[str, Document]
    report: AccountingReport

    def apply(self, corpus: Iterable[Document]) -> Iterator[Document]:
        """Stream the corpus with modified documents swapped in."""
        for doc in corpus:
            yield self.replacements.get(doc.id, doc)


def synthesize_sentence(
    sentence: str,
    cs_type: CsType,
    src_lang: str,
    tgt_lang: str,
    translator: Translator,
    generator: TokenCsGenerator,
) -> str:
    """Rewrite one pure sentence into ``cs_type``; raises BackendError when nothing usable comes back."""
    if cs_type in (CsType.SentRepl, CsType.SentAnnt):
        translation = translator.translate(sentence, src_lang, tgt_lang).strip()
        if not translation:
            raise BackendError("Translator returned an empty translation")
        output = translation if cs_type == CsType.SentRepl else f"{sentence} ({translation})"
    elif cs_type == CsType.TokenAnnt:
        output = generator.annotate(sentence, src_lang, tgt_lang)
    else:
        output = generator.replace(sentence, src_lang, tgt_lang)
    if not output or not output.strip():
        raise BackendError("Backend returned empty output")
    if output == sentence:
        raise BackendError("Backend returned the sentence unchanged")
    return output


def visiting_order(catalog: Iterable[tuple[int, str]], seed: int) -> list[tuple[int, str]]:
    """Seeded document order: ascending hash of (seed, doc id)."""
    return sorted(catalog, key=lambda item: (hash64(seed, item[1]), item[0]))


def eligible_documents(catalog: Iterable[tuple[int, str]], plan: SynthesisPlan) -> list[tuple[int, str]]:
    ordered = visiting_order(catalog, plan.seed)
    return ordered[:int(plan.cap * len(ordered))]


def select_sentences(doc: Document, pair: LanguagePair, plan: SynthesisPlan, own_tag: LanguageTag) -> list[Span]:
    """Seeded sample of the document's pure own-language sentences, in text order."""
    candidates = [s.span for s in tag_document(doc, pair) if s.tag == own_tag]
    k = int(plan.sentence_density * len(candidates) + 0.5)
    if not k:
        return []
    rng = Xoshiro256.for_stream(plan.seed, "sentences", doc.id)
    return sorted(rng.sample(candidates, k))


class Synthesizer:
    """Proposes and commits edits for one plan."""

    def __init__(
        self,
        pair: LanguagePair,
        plan: SynthesisPlan,
        translator: Translator,
        generator: TokenCsGenerator,
        counter: TokenCounter,
    ):
        self.pair = pair
        self.plan = plan
        self.translator = translator
        self.generator = generator
        self.counter = counter
        self.src_lang, self.tgt_lang = plan.languages(pair)
        self.own_tag = LanguageTag.PurePrimary if plan.side == Side.InPrimary else LanguageTag.PureSecondary

    @property
    def serial(self) -> bool:
        return self.translator.serial or self.generator.serial

    def _measure(self, before: str, after: str) -> tuple[dict[str, int], dict[str, int], int]:
        added, removed = {}, {}
        for lang in (self.src_lang, self.tgt_lang):
            net = self.counter.count(after, lang) - self.counter.count(before, lang)
            added[lang] = max(net, 0)
            removed[lang] = max(-net, 0)
        return added, removed, added[self.tgt_lang]

    def propose(self, doc: Document) -> Proposal:
        proposal = Proposal(doc)
        for span in select_sentences(doc, self.pair, self.plan, self.own_tag):
            sentence = span.of(doc.text)
            try:
                output = synthesize_sentence(
                    sentence, self.plan.cs_type, self.src_lang, self.tgt_lang, self.translator, self.generator
                )
            except BackendError as e:
                logger.warning(f"{doc.id}: left sentence at {span.start} unmodified: {e}")
                proposal.failures += 1
                continue
            added, removed, delta = self._measure(sentence, output)
            proposal.edits.append(SentenceEdit(span, output, added, removed, delta))
        return proposal

    def run(self, corpus: Sequence[Document], catalog: list[tuple[int, str]], threads: int = 1) -> SynthesisResult:
        plan = self.plan
        name = f"{plan.side.value}:{plan.cs_type.value}"
        report = AccountingReport(allocation=name, token_budget=plan.token_budget)
        if plan.side == Side.InSecondary and plan.sentence_density > SECONDARY_DENSITY_WARNING:
            message = (
                f"sentence_density {plan.sentence_density} rewrites most of the {self.src_lang} corpus; "
                "heavy modification of the lower-resource side tends to hurt it"
            )
            report.warnings.append(message)
            logger.warning(message)

        eligible = eligible_documents(catalog, plan)
        report.docs_eligible = len(eligible)
        replacements: dict[str, Document] = {}
        if plan.budget_driven and plan.token_budget == 0:
            return SynthesisResult(replacements, report)

        threads = 1 if self.serial else threads
        proposals = ordered_map(lambda item: self.propose(corpus[item[0]]), eligible, threads)
        exhausted = False
        for proposal in proposals:
            report.failures += proposal.failures
            committed: list[SentenceEdit] = []
            for edit in proposal.edits:
                if plan.budget_driven and report.budget_tokens >= plan.token_budget:
                    exhausted = True
                    break
                committed.append(edit)
                report.budget_tokens += edit.budget_delta
                report.max_sentence_delta = max(report.max_sentence_delta, edit.budget_delta)
                report.add_counts(edit.added, edit.removed)
            if committed:
                replacements[proposal.document.id] = self._apply(proposal.document, committed)
                report.docs_touched += 1
                report.sentences_modified += len(committed)
            if exhausted:
                break

        if plan.budget_driven and report.budget_tokens < plan.token_budget:
            report.shortfall = plan.token_budget - report.budget_tokens
            message = f"{name}: budget {plan.token_budget} unreachable, short by {report.shortfall} tokens"
            report.warnings.append(message)
            logger.warning(message)
        logger.log(
            "SYNTH",
            f"{name}: modified {report.sentences_modified} sentences in {report.docs_touched} documents, "
            f"+{report.budget_tokens} {self.tgt_lang} tokens",
        )
        return SynthesisResult(replacements, report)

    def _apply(self, doc: Document, edits: list[SentenceEdit]) -> Document:
        """Splice committed edits into the document.

        Spaced-language text spliced into an unspaced host gets a space before
        the host text that follows it, otherwise a Latin full stop would not
        end the sentence.
        """
        needs_gap = doc.lang in UNSPACED_LANGUAGES and self.tgt_lang not in UNSPACED_LANGUAGES
        pieces, cursor = [], 0
        for edit in edits:
            pieces.append(doc.text[cursor:edit.span.start])
            pieces.append(edit.text)
            cursor = edit.span.end
            if (
                needs_gap
                and cursor < len(doc.text)
                and not doc.text[cursor].isspace()
                and not UNSPACED_TAIL.search(edit.text)
            ):
                pieces.append(" ")
        pieces.append(doc.text[cursor:])
        meta = dict(doc.meta)
        meta["syncs"] = {"side": self.plan.side.value, "cs_type": self.plan.cs_type.value, "sentences": len(edits)}
        return Document(doc.id, doc.lang, "".join(pieces), meta)


def catalog_of(corpus: Iterable[Document], lang: str) -> list[tuple[int, str]]:
    """(position, id) of every document in ``lang``."""
    return [(i, doc.id) for i, doc in enumerate(corpus) if doc.lang == lang]


def allocate_and_synthesize(
    corpus: Sequence[Document],
    plan: SynthesisPlan,
    pair: LanguagePair,
    translator: Translator,
    generator: TokenCsGenerator,
    counter: TokenCounter,
    threads: int = 1,
) -> SynthesisResult:
    synthesizer = Synthesizer(pair, plan, translator, generator, counter)
    return synthesizer.run(corpus, catalog_of(corpus, synthesizer.src_lang), threads)
