"""Rule-based sentence splitter for mixed Latin/CJK text."""
from program.corpus.models import Document, Span

# always end a sentence
CJK_TERMINATORS = frozenset("。！？；")
# end a sentence only before whitespace, end of text or CJK text
LATIN_TERMINATORS = frozenset(".!?…")
TERMINATORS = CJK_TERMINATORS | LATIN_TERMINATORS
CLOSERS = frozenset("\"'”’)]}）】」』》〉")

ABBREVIATIONS = frozenset({
    "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr",
    "e.g", "i.e", "u.s", "u.k", "vs", "cf", "approx", "a.m", "p.m",
})
# only when a number follows, "No. 5"
NUMBERED_ABBREVIATIONS = frozenset({"no", "vol", "fig", "p", "pp", "ch", "sec"})


def _is_cjk(char: str) -> bool:
    return "\u3000" <= char <= "\u9fff" or "\uff00" <= char <= "\uffef"


def _word_before(text: str, index: int) -> tuple[str, int]:
    """The letters/digits/dots token ending right before ``index`` and its start."""
    start = index
    while start > 0 and (text[start - 1].isalnum() or text[start - 1] == ".") and not _is_cjk(text[start - 1]):
        start -= 1
    return text[start:index], start


def _prev_non_space(text: str, index: int, floor: int) -> str:
    while index > floor and text[index - 1].isspace():
        index -= 1
    return text[index - 1] if index > floor else ""


def _next_non_space(text: str, index: int) -> str:
    while index < len(text) and text[index].isspace():
        index += 1
    return text[index] if index < len(text) else ""


def _is_boundary(text: str, sentence_start: int, term_start: int, term_end: int) -> bool:
    run = text[term_start:term_end]
    if any(ch in CJK_TERMINATORS for ch in run):
        return True
    if term_end < len(text) and not (text[term_end].isspace() or _is_cjk(text[term_end])):
        return False
    if run.strip("".join(CLOSERS)) != ".":
        return True

    word, word_start = _word_before(text, term_start)
    lowered = word.lower()
    if lowered in ABBREVIATIONS:
        return False
    if lowered in NUMBERED_ABBREVIATIONS and _next_non_space(text, term_end).isdigit():
        return False
    # enumerators: "1. Putting up", "festival: 1. Putting up"
    if word.isdigit() and len(word) <= 3:
        before = _prev_non_space(text, word_start, sentence_start)
        if before in ("", ":", "："):
            return False
    return True


def split_text(text: str) -> list[Span]:
    """Split text into whitespace-stripped sentence spans in text order."""
    spans: list[Span] = []

    def emit(start: int, end: int):
        while start < end and text[start].isspace():
            start += 1
        while end > start and text[end - 1].isspace():
            end -= 1
        if start < end:
            spans.append(Span(start, end))

    n = len(text)
    start = i = 0
    while i < n:
        char = text[i]
        if char == "\n":
            emit(start, i)
            start = i = i + 1
            continue
        if char in TERMINATORS:
            j = i
            while j < n and text[j] in TERMINATORS:
                j += 1
            while j < n and text[j] in CLOSERS:
                j += 1
            if _is_boundary(text, start, i, j):
                emit(start, j)
                start = j
            i = j
            continue
        i += 1
    emit(start, n)
    return spans


def split_sentences(doc: Document, pair=None) -> list[Span]:
    """Sentence spans of a document. The rules are language-independent, so
    ``pair`` is accepted for interface symmetry only."""
    return split_text(doc.text)
