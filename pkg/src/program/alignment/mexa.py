"""Cross-lingual alignment from parallel-sentence embeddings.

The score is mutual nearest-neighbour retrieval accuracy under cosine
similarity: pair ``i`` counts when row ``i`` of E retrieves row ``i`` of F and
row ``i`` of F retrieves row ``i`` of E. Outputs are always labelled
``mutual-nn-cosine``.
"""
import csv
import io
import json
from collections.abc import Sequence
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel

from program.corpus.io import EmbeddingFormatError, read_embeddings
from program.corpus.models import CorpusModelError, EmbeddingMatrix
from program.utils import ordered_map
from program.utils.logging import logger

METHOD = "mutual-nn-cosine"


class AlignmentInputError(Exception):
    """Raised when a pair of embedding matrices cannot be scored"""


class LayerScore(BaseModel):
    index: int
    score: Optional[float] = None
    ties: int = 0
    error: Optional[str] = None


class AlignmentResult(BaseModel):
    method: str = METHOD
    n_pairs: int = 0
    layers: list[LayerScore] = []

    @property
    def per_layer_scores(self) -> list[Optional[float]]:
        return [layer.score for layer in self.layers]

    @property
    def failed(self) -> list[int]:
        return [layer.index for layer in self.layers if layer.error is not None]

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json", exclude_none=True), indent=2) + "\n"

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(("layer", "score"))
        for layer in self.layers:
            writer.writerow((layer.index, "" if layer.score is None else f"{layer.score:.6f}"))
        return buffer.getvalue()


def _normalized(matrix: EmbeddingMatrix, name: str) -> np.ndarray:
    data = matrix.data.astype(np.float64)
    norms = np.linalg.norm(data, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if len(zero):
        raise AlignmentInputError(f"{name} row {int(zero[0])} has zero norm")
    return data / norms[:, None]


def _argmax_with_ties(similarity: np.ndarray) -> tuple[np.ndarray, int]:
    """Row-wise argmax (lowest index wins) and the number of rows with a tied maximum."""
    best = similarity.argmax(axis=1)
    top = similarity[np.arange(len(similarity)), best]
    ties = int(np.count_nonzero((similarity == top[:, None]).sum(axis=1) > 1))
    return best, ties


def score_with_ties(e: EmbeddingMatrix, f: EmbeddingMatrix) -> tuple[float, int]:
    if e.n != f.n:
        raise AlignmentInputError(f"Row count mismatch: {e.n} vs {f.n}")
    if e.d != f.d:
        raise AlignmentInputError(f"Dimension mismatch: {e.d} vs {f.d}")
    if e.n < 2:
        raise AlignmentInputError(f"Need at least 2 parallel pairs, got {e.n}")
    similarity = _normalized(e, "E") @ _normalized(f, "F").T
    forward, forward_ties = _argmax_with_ties(similarity)
    backward, backward_ties = _argmax_with_ties(similarity.T)
    index = np.arange(e.n)
    hits = np.count_nonzero((forward == index) & (backward == index))
    return hits / e.n, forward_ties + backward_ties


def alignment_score(e: EmbeddingMatrix, f: EmbeddingMatrix) -> float:
    return score_with_ties(e, f)[0]


def _score_layer(item: tuple[int, tuple[Path, Path]]) -> tuple[LayerScore, int]:
    index, (e_path, f_path) = item
    try:
        e, f = read_embeddings(e_path), read_embeddings(f_path)
        score, ties = score_with_ties(e, f)
    except (AlignmentInputError, EmbeddingFormatError, CorpusModelError, OSError) as exc:
        logger.error(f"Layer {index}: {exc}")
        return LayerScore(index=index, error=str(exc)), 0
    return LayerScore(index=index, score=score, ties=ties), e.n


def layerwise_scores(layer_files: Sequence[tuple[Path, Path]], threads: int = 1) -> AlignmentResult:
    """Score each (E, F) file pair in order; a failing layer is reported and skipped."""
    result = AlignmentResult()
    for layer, n in ordered_map(_score_layer, list(enumerate(layer_files, start=1)), threads):
        result.layers.append(layer)
        if layer.error is None:
            if result.n_pairs and n != result.n_pairs:
                logger.warning(f"Layer {layer.index} has {n} pairs, earlier layers have {result.n_pairs}")
            result.n_pairs = result.n_pairs or n
    logger.log("MEXA", f"Scored {len(result.layers) - len(result.failed)}/{len(result.layers)} layers")
    return result
