"""Cross-lingual sentence encoders."""
from abc import ABC, abstractmethod

import numpy as np

from program.synthesis.lexicon import Lexicon


class EncoderError(Exception):
    """Raised when an encoder cannot embed a text"""


class CrossLingualEncoder(ABC):
    """Maps text in either language of a pair into one shared vector space."""

    @property
    @abstractmethod
    def dimension(self) -> int:
        ...

    @abstractmethod
    def embed(self, text: str) -> np.ndarray:
        ...

    def embed_many(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dimension), dtype=np.float64)
        return np.vstack([self.embed(t) for t in texts])


class DictionaryEncoder(CrossLingualEncoder):
    """Bag of lexicon concepts.

    A sentence and its dictionary translation share their concept bag, so they
    embed identically; sentences with no shared concept are orthogonal.
    """

    def __init__(self, lexicon: Lexicon):
        if not lexicon.concepts:
            raise EncoderError("Dictionary encoder needs a non-empty lexicon")
        self.lexicon = lexicon

    @property
    def dimension(self) -> int:
        return len(self.lexicon.concepts)

    def embed(self, text: str) -> np.ndarray:
        vector = np.zeros(self.dimension, dtype=np.float64)
        for lang in (self.lexicon.src_lang, self.lexicon.tgt_lang):
            for match in self.lexicon.find(text, lang):
                vector[self.lexicon.concept_index[match.entry.concept_id]] += 1.0
        return vector


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity, 0.0 when either vector is zero."""
    norm = float(np.linalg.norm(a) * np.linalg.norm(b))
    if norm == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / norm, -1.0, 1.0))
