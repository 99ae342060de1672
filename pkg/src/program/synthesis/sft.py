"""Supervised fine-tuning data for a token-level code-switching generator.

A strong model first writes code-switched sentences from parallel pairs. The
SFT records then keep only the source-language sentence in the instruction,
so the fine-tuned model learns to code-switch from monolingual input.
"""
import json
from collections.abc import Iterable, Iterator, Mapping, Sequence
from pathlib import Path
from typing import Optional

from pydantic import BaseModel

from program.types import Category, language_name
from program.utils.logging import logger

ANNOTATION_PROMPT = (
    "Given a pair of {source}-{target} parallel sentence, generate {article} {target}-annotated {source} sentence. "
    "Annotation is the use of words from another language to explain certain words in a sentence.\n\n"
    "[{source} Sentence]: {sentence}"
)

REPLACEMENT_PROMPT = (
    "Given a pair of {source}-{target} sentence, generate a {source} and {target} code-switching sentence. "
    "Code-switching is the use of more than one linguistic variety in a manner consistent with the syntax "
    "and phonology of each variety.\n\n"
    "[{source} Sentence]: {sentence}"
)

PARALLEL_LINE = "\n[{target} Sentence]: {parallel}"

TASKS = (Category.Annotation, Category.Replacement)


class MisalignedInputError(Exception):
    """Raised when parallel pairs and generated outputs differ in length"""


class SftRecord(BaseModel):
    instruction: str
    response: str
    task: Category
    lang_pair: str


def _article(word: str) -> str:
    return "an" if word[:1].upper() in "AEIOU" else "a"


def generation_prompt(
    task: Category,
    src_lang: str,
    tgt_lang: str,
    sentence: str,
    parallel: Optional[str] = None,
) -> str:
    """Prompt for code-switching ``sentence`` (in ``src_lang``) with ``tgt_lang`` material.

    With ``parallel`` the prompt carries the target-language sentence too, which
    is how the outputs are first produced; SFT instructions omit it.
    """
    if task not in TASKS:
        raise ValueError(f"No generation prompt for task {task}")
    source, target = language_name(src_lang), language_name(tgt_lang)
    template = ANNOTATION_PROMPT if task == Category.Annotation else REPLACEMENT_PROMPT
    prompt = template.format(source=source, target=target, article=_article(target), sentence=sentence)
    if parallel is not None:
        prompt += PARALLEL_LINE.format(target=target, parallel=parallel)
    return prompt


def export_sft_records(
    pairs: Sequence[tuple[str, str]],
    generated: Sequence[str],
    task: Category,
    src_lang: str,
    tgt_lang: str,
) -> Iterator[SftRecord]:
    """One record per (source, target) pair; only the source sentence enters the instruction."""
    if len(pairs) != len(generated):
        raise MisalignedInputError(f"{len(pairs)} parallel pairs but {len(generated)} generated outputs")

    def records() -> Iterator[SftRecord]:
        for (source, _target), output in zip(pairs, generated):
            yield SftRecord(
                instruction=generation_prompt(task, src_lang, tgt_lang, source),
                response=output,
                task=task,
                lang_pair=f"{src_lang}-{tgt_lang}",
            )

    return records()


def sft_tasks(lang_a: str, lang_b: str) -> list[tuple[Category, str, str]]:
    """Both tasks in both directions of a language pair."""
    return [(task, src, tgt) for src, tgt in ((lang_a, lang_b), (lang_b, lang_a)) for task in TASKS]


def export_sft_dataset(
    pairs: Sequence[tuple[str, str]],
    outputs: Mapping[tuple[Category, str, str], Sequence[str]],
    lang_a: str,
    lang_b: str,
) -> Iterator[SftRecord]:
    """Records for every task in ``sft_tasks``; pairs are (lang_a, lang_b) sentences.

    ``outputs`` maps ``(task, src_lang, tgt_lang)`` to the generated sentences
    for that task, aligned with ``pairs``.
    """
    for task, src, tgt in sft_tasks(lang_a, lang_b):
        if (task, src, tgt) not in outputs:
            raise MisalignedInputError(f"No outputs for {task.value} {src}->{tgt}")
        directed = pairs if src == lang_a else [(b, a) for a, b in pairs]
        yield from export_sft_records(directed, outputs[(task, src, tgt)], task, src, tgt)


def write_sft_records(records: Iterable[SftRecord], path: Path) -> int:
    count = 0
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as file:
        for record in records:
            file.write(json.dumps(record.model_dump(mode="json"), ensure_ascii=False) + "\n")
            count += 1
    logger.log("SFT", f"Wrote {count} SFT records to {path}")
    return count
