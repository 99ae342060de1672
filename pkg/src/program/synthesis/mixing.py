"""Mixing strategies: several synthesis allocations over one budget.

Every document of a side goes to exactly one allocation of that side, chosen
by a stable hash of its id against the allocations' budget weights, so no
document receives two code-switching types.
"""
import bisect
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from typing import Optional

from pydantic import BaseModel, Field

from program.corpus.models import Document, LanguagePair
from program.synthesis.backends import TokenCounter, TokenCsGenerator, Translator
from program.synthesis.synthesizer import AccountingReport, SynthesisPlan, Synthesizer
from program.types import CsType, MixPreset, Side
from program.utils import hash64
from program.utils.logging import logger

# headline extreme mix: token replacement in primary docs at 2000M, token annotation in secondary docs at 200M
EXTREME_PRIMARY = 2000
EXTREME_SECONDARY = 200

EQUAL_CELLS = tuple(
    (side, cs_type)
    for side in (Side.InPrimary, Side.InSecondary)
    for cs_type in (CsType.SentAnnt, CsType.SentRepl, CsType.TokenAnnt, CsType.TokenRepl)
)


class MixError(Exception):
    """Raised when a mix cannot be planned or executed"""


class Allocation(BaseModel):
    side: Side
    cs_type: CsType
    token_budget: int = Field(ge=0)

    @property
    def name(self) -> str:
        return f"{self.side.value}:{self.cs_type.value}"


class MixPlan(BaseModel):
    allocations: list[Allocation] = Field(min_length=1)
    preset: Optional[MixPreset] = None

    @property
    def total_budget(self) -> int:
        return sum(a.token_budget for a in self.allocations)


def plan_mix(
    preset: Optional[MixPreset] = None,
    total_budget: int = 0,
    allocations: Optional[Iterable[Allocation]] = None,
) -> MixPlan:
    """Expand a preset (or wrap explicit allocations) into a MixPlan.

    Integer splits give any remainder to the first cells, so allocations
    always sum to ``total_budget``.
    """
    if allocations is not None:
        return MixPlan(allocations=list(allocations), preset=preset)
    if preset is None:
        raise MixError("Either a preset or explicit allocations are required")
    if total_budget < 0:
        raise MixError(f"total_budget must be non-negative, got {total_budget}")

    if preset == MixPreset.Equal:
        base, remainder = divmod(total_budget, len(EQUAL_CELLS))
        cells = [
            Allocation(side=side, cs_type=cs_type, token_budget=base + (1 if i < remainder else 0))
            for i, (side, cs_type) in enumerate(EQUAL_CELLS)
        ]
    elif preset == MixPreset.Extreme:
        whole = EXTREME_PRIMARY + EXTREME_SECONDARY
        primary = (2 * total_budget * EXTREME_PRIMARY + whole) // (2 * whole)
        cells = [
            Allocation(side=Side.InPrimary, cs_type=CsType.TokenRepl, token_budget=primary),
            Allocation(side=Side.InSecondary, cs_type=CsType.TokenAnnt, token_budget=total_budget - primary),
        ]
    else:
        half = total_budget - total_budget // 2
        cells = [
            Allocation(side=Side.InPrimary, cs_type=CsType.TokenRepl, token_budget=half),
            Allocation(side=Side.InPrimary, cs_type=CsType.SentRepl, token_budget=total_budget - half),
        ]
    return MixPlan(allocations=cells, preset=preset)


class ChainedCorpus(Sequence[Document]):
    """Several corpora addressed as one sequence."""

    def __init__(self, corpora: Sequence[Sequence[Document]]):
        self.corpora = list(corpora)
        self.offsets = []
        total = 0
        for corpus in self.corpora:
            self.offsets.append(total)
            total += len(corpus)
        self.total = total

    def __len__(self) -> int:
        return self.total

    def __getitem__(self, index):
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(self.total))]
        if index < 0:
            index += self.total
        if not 0 <= index < self.total:
            raise IndexError(index)
        which = bisect.bisect_right(self.offsets, index) - 1
        return self.corpora[which][index - self.offsets[which]]

    def __iter__(self) -> Iterator[Document]:
        for corpus in self.corpora:
            yield from corpus


@dataclass
class MixResult:
    replacements: dict[str, Document]
    reports: list[AccountingReport]

    def apply(self, corpus: Iterable[Document]) -> Iterator[Document]:
        for doc in corpus:
            yield self.replacements.get(doc.id, doc)

    @property
    def failures(self) -> int:
        return sum(r.failures for r in self.reports)

    def consolidated(self) -> dict:
        """Per-allocation accounting plus a ``total`` entry summing them."""
        report = {r.allocation: r.summary() for r in self.reports}
        total = AccountingReport(allocation="total")
        for r in self.reports:
            total.docs_touched += r.docs_touched
            total.sentences_modified += r.sentences_modified
            total.failures += r.failures
            total.add_counts(r.tokens_added_by_lang, r.tokens_removed_by_lang)
        report["total"] = total.summary()
        return report


def partition_documents(
    corpus: Iterable[Document],
    mix: MixPlan,
    pair: LanguagePair,
    seed: int,
) -> list[list[tuple[int, str]]]:
    """One (position, id) catalog per allocation; catalogs are disjoint.

    A document maps to ``hash64(seed, "mix", id) / 2**64`` and lands in the
    allocation whose cumulative budget share of its side covers that point.
    Sides whose allocations all have zero budget share equally.
    """
    side_lang = {Side.InPrimary: pair.primary_lang, Side.InSecondary: pair.secondary_lang}
    bounds: dict[str, tuple[list[int], list[float]]] = {}
    for side, lang in side_lang.items():
        members = [i for i, a in enumerate(mix.allocations) if a.side == side]
        if not members:
            continue
        weights = [mix.allocations[i].token_budget for i in members]
        if not sum(weights):
            weights = [1] * len(members)
        running, edges = 0, []
        for weight in weights:
            running += weight
            edges.append(running / sum(weights))
        bounds[lang] = (members, edges)

    catalogs: list[list[tuple[int, str]]] = [[] for _ in mix.allocations]
    seen: set[str] = set()
    for position, doc in enumerate(corpus):
        if doc.id in seen:
            raise MixError(f"Document id '{doc.id}' appears twice across the mixed corpora")
        seen.add(doc.id)
        if doc.lang not in bounds:
            continue
        members, edges = bounds[doc.lang]
        point = hash64(seed, "mix", doc.id) / 2**64
        slot = min(bisect.bisect_right(edges, point), len(members) - 1)
        catalogs[members[slot]].append((position, doc.id))
    return catalogs


def execute_mix(
    corpora: Sequence[Sequence[Document]],
    mix: MixPlan,
    pair: LanguagePair,
    translator: Translator,
    generator: TokenCsGenerator,
    counter: TokenCounter,
    seed: int = 0,
    sentence_density: float = 0.5,
    doc_eligibility_cap: Optional[float] = None,
    threads: int = 1,
) -> MixResult:
    """Run every allocation on its own document partition and merge the results."""
    corpus = ChainedCorpus(corpora)
    catalogs = partition_documents(corpus, mix, pair, seed)
    replacements: dict[str, Document] = {}
    reports = []
    for allocation, catalog in zip(mix.allocations, catalogs):
        plan = SynthesisPlan(
            side=allocation.side,
            cs_type=allocation.cs_type,
            token_budget=allocation.token_budget,
            sentence_density=sentence_density,
            doc_eligibility_cap=doc_eligibility_cap,
            seed=seed,
        )
        logger.log("MIX", f"{allocation.name}: {len(catalog)} documents, budget {allocation.token_budget}")
        result = Synthesizer(pair, plan, translator, generator, counter).run(corpus, catalog, threads)
        replacements.update(result.replacements)
        reports.append(result.report)
    mixed = MixResult(replacements, reports)
    logger.log("MIX", f"Mixed {len(mix.allocations)} allocations, {len(replacements)} documents modified")
    return mixed
