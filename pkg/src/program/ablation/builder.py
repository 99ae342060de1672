"""Ablation datasets built by document substitution.

The main corpus M and a holdout pool P are split into documents with (wcs)
and without (wocs) code-switching. The code-switching-free set replaces every
wcs document of M with clean pool documents S. The control set instead
replaces an equally sized random subset T of clean main documents with the
same S, so both sets differ from M by the same newly introduced documents.
"""
import json
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from pydantic import BaseModel

from program.corpus.models import DetectedDocument, Document
from program.types import AblationMode, SizeUnit
from program.utils.logging import logger
from program.utils.sampling import Xoshiro256


class AblationError(Exception):
    """Base exception for ablation builds"""


class IdCollisionError(AblationError):
    """Raised when a document id appears in both the main corpus and the pool"""


class InsufficientPoolError(AblationError):
    """Raised when there are not enough clean documents to substitute"""

    def __init__(self, message: str, shortfall: int):
        super().__init__(message)
        self.shortfall = shortfall


class Role(str, Enum):
    kept = "kept"
    substituted_in = "substituted-in"
    substituted_out = "substituted-out"
    added = "added"


@dataclass
class PartitionedCorpus:
    main_ids: list[str] = field(default_factory=list)
    pool_ids: list[str] = field(default_factory=list)
    wcs: set[str] = field(default_factory=set)
    tokens: Optional[dict[str, int]] = None

    @property
    def m_wcs(self) -> list[str]:
        return [i for i in self.main_ids if i in self.wcs]

    @property
    def m_wocs(self) -> list[str]:
        return [i for i in self.main_ids if i not in self.wcs]

    @property
    def p_wcs(self) -> list[str]:
        return [i for i in self.pool_ids if i in self.wcs]

    @property
    def p_wocs(self) -> list[str]:
        return [i for i in self.pool_ids if i not in self.wcs]

    def size(self, ids: Iterable[str], unit: SizeUnit) -> int:
        if unit == SizeUnit.documents:
            return sum(1 for _ in ids)
        if self.tokens is None:
            raise AblationError("Token sizes were not counted; partition with a token counter")
        return sum(self.tokens[i] for i in ids)


class AblationSpec(BaseModel):
    mode: AblationMode
    seed: int = 0
    size_unit: SizeUnit = SizeUnit.documents
    token_budget: int = 0  # monolingual addition only


@dataclass
class AblationResult:
    spec: AblationSpec
    main_ids: list[str]
    removed: set[str]
    added: list[str]
    target: int
    achieved: int

    @property
    def residual(self) -> int:
        return self.achieved - self.target

    @property
    def output_ids(self) -> list[str]:
        return [i for i in self.main_ids if i not in self.removed] + list(self.added)

    def header(self) -> dict:
        return {
            "manifest": self.spec.mode.value,
            "seed": self.spec.seed,
            "size_unit": self.spec.size_unit.value,
            "size_note": (
                "equal corpus size is measured in documents or tokens by choice; "
                "neither unit is implied by the ablation design"
            ),
            "target": self.target,
            "achieved": self.achieved,
            "residual": self.residual,
            "removed": len(self.removed),
            "added": len(self.added),
        }

    def manifest(self) -> Iterator[dict]:
        add_role = Role.added if self.spec.mode == AblationMode.Monolingual else Role.substituted_in
        for doc_id in self.main_ids:
            role = Role.substituted_out if doc_id in self.removed else Role.kept
            yield {"id": doc_id, "origin": "M", "role": role.value}
        for doc_id in self.added:
            yield {"id": doc_id, "origin": "P", "role": add_role.value}


def partition(
    corpus: Iterable[DetectedDocument],
    pool: Iterable[DetectedDocument],
    counter=None,
) -> PartitionedCorpus:
    """Sort main and pool documents into wcs/wocs cells.

    A document is wcs when it holds at least one segment that is not
    unrelated. With a ``counter`` every document's token count is recorded
    for token-sized ablations.
    """
    parts = PartitionedCorpus(tokens={} if counter is not None else None)
    main_seen: set[str] = set()
    for ids, stream, is_main in ((parts.main_ids, corpus, True), (parts.pool_ids, pool, False)):
        for result in stream:
            doc = result.document
            if not is_main and doc.id in main_seen:
                raise IdCollisionError(f"Document id '{doc.id}' is in both the main corpus and the pool")
            if is_main:
                main_seen.add(doc.id)
            ids.append(doc.id)
            if result.has_related_cs:
                parts.wcs.add(doc.id)
            if counter is not None:
                parts.tokens[doc.id] = counter.count(doc.text, doc.lang)
    logger.log(
        "ABLATE",
        f"Partitioned main {len(parts.main_ids)} ({len(parts.m_wcs)} wcs) and pool {len(parts.pool_ids)} ({len(parts.p_wcs)} wcs)",
    )
    return parts


def _draw(parts: PartitionedCorpus, candidates: list[str], target: int, unit: SizeUnit,
          rng: Xoshiro256, what: str) -> list[str]:
    """Uniform draw without replacement until ``target`` is reached in ``unit``."""
    if unit == SizeUnit.documents:
        if target > len(candidates):
            shortfall = target - len(candidates)
            raise InsufficientPoolError(f"Need {target} clean {what} documents, only {len(candidates)} available", shortfall)
        return rng.sample(candidates, target)
    chosen, total = [], 0
    for doc_id in rng.shuffle(list(candidates)):
        if total >= target:
            break
        chosen.append(doc_id)
        total += parts.tokens[doc_id]
    if total < target:
        raise InsufficientPoolError(f"Need {target} tokens of clean {what} documents, only {total} available", target - total)
    return chosen


def _order(ids: list[str], chosen: list[str]) -> list[str]:
    chosen_set = set(chosen)
    return [i for i in ids if i in chosen_set]


def substitutes(parts: PartitionedCorpus, spec: AblationSpec) -> list[str]:
    """S: clean pool documents matching the size of M_wcs, drawn from the seed's "S" stream."""
    target = parts.size(parts.m_wcs, spec.size_unit)
    rng = Xoshiro256.for_stream(spec.seed, "S")
    return _order(parts.pool_ids, _draw(parts, parts.p_wocs, target, spec.size_unit, rng, "pool"))


def build_cs_free(parts: PartitionedCorpus, spec: AblationSpec) -> AblationResult:
    """M_wocs plus S."""
    s = substitutes(parts, spec)
    result = AblationResult(
        spec=spec,
        main_ids=parts.main_ids,
        removed=set(parts.m_wcs),
        added=s,
        target=parts.size(parts.main_ids, spec.size_unit),
        achieved=parts.size(parts.m_wocs, spec.size_unit) + parts.size(s, spec.size_unit),
    )
    logger.log("ABLATE", f"cs-free set: removed {len(result.removed)} wcs documents, substituted {len(s)}")
    return result


def build_control(parts: PartitionedCorpus, spec: AblationSpec) -> AblationResult:
    """(M minus T) plus S, with T drawn from M_wocs to the size of S."""
    s = substitutes(parts, spec)
    rng = Xoshiro256.for_stream(spec.seed, "T")
    t = _draw(parts, parts.m_wocs, parts.size(s, spec.size_unit), spec.size_unit, rng, "main")
    result = AblationResult(
        spec=spec,
        main_ids=parts.main_ids,
        removed=set(t),
        added=s,
        target=parts.size(parts.main_ids, spec.size_unit),
        achieved=parts.size(parts.main_ids, spec.size_unit) - parts.size(t, spec.size_unit) + parts.size(s, spec.size_unit),
    )
    logger.log("ABLATE", f"control set: substituted {len(t)} clean main documents with {len(s)} pool documents")
    return result


def build_monolingual_addition(parts: PartitionedCorpus, spec: AblationSpec) -> AblationResult:
    """M plus clean pool documents totalling at least ``spec.token_budget`` tokens.

    The comparison arm for synthetic code-switching: the same number of new
    tokens added as plain monolingual text.
    """
    if parts.tokens is None:
        raise AblationError("Monolingual addition needs token counts; partition with a token counter")
    rng = Xoshiro256.for_stream(spec.seed, "A")
    added = _order(parts.pool_ids, _draw(parts, parts.p_wocs, spec.token_budget, SizeUnit.tokens, rng, "pool"))
    base = parts.size(parts.main_ids, SizeUnit.tokens)
    result = AblationResult(
        spec=spec.model_copy(update={"size_unit": SizeUnit.tokens}),
        main_ids=parts.main_ids,
        removed=set(),
        added=added,
        target=base + spec.token_budget,
        achieved=base + parts.size(added, SizeUnit.tokens),
    )
    logger.log("ABLATE", f"monolingual addition: {len(added)} documents, {result.achieved - base} tokens")
    return result


def build(parts: PartitionedCorpus, spec: AblationSpec) -> AblationResult:
    builders = {
        AblationMode.CsFree: build_cs_free,
        AblationMode.Control: build_control,
        AblationMode.Monolingual: build_monolingual_addition,
    }
    return builders[spec.mode](parts, spec)


def write_manifest(result: AblationResult, path: Path) -> int:
    """JSONL manifest: one header object, then one entry per document."""
    count = 0
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as file:
        file.write(json.dumps(result.header(), ensure_ascii=False) + "\n")
        for entry in result.manifest():
            file.write(json.dumps(entry, ensure_ascii=False) + "\n")
            count += 1
    return count


def read_manifest(path: Path) -> tuple[dict, list[dict]]:
    with open(path, "r", encoding="utf-8") as file:
        lines = [json.loads(line) for line in file if line.strip()]
    if not lines or "manifest" not in lines[0]:
        raise AblationError(f"{path}: missing manifest header")
    return lines[0], lines[1:]


def materialize(result: AblationResult, main: Iterable[Document], pool: Iterable[Document]) -> Iterator[Document]:
    """Stream the ablated corpus: kept main documents in order, then added pool documents in pool order."""
    removed = result.removed
    for doc in main:
        if doc.id not in removed:
            yield doc
    added = set(result.added)
    for doc in pool:
        if doc.id in added:
            yield doc
