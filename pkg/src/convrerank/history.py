"""Cross-utterance context: fold-in pooling and exponentially decayed mixing."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

DEFAULT_MAX_UTTERANCES = 5
DEFAULT_DECAY = 0.5


@dataclass
class HistoryState:
    """Ring of the most recent chosen transcripts within one session."""

    max_utterances: int = DEFAULT_MAX_UTTERANCES
    decay: float = DEFAULT_DECAY
    transcripts: deque = field(default_factory=deque, repr=False)

    def __post_init__(self) -> None:
        if self.max_utterances < 1:
            raise ValueError(f"max_utterances must be >= 1, got {self.max_utterances}")
        if not 0.0 <= self.decay <= 1.0:
            raise ValueError(f"decay must lie in [0, 1], got {self.decay}")
        self.transcripts = deque(self.transcripts, maxlen=self.max_utterances)

    def append(self, transcript: list[str]) -> None:
        self.transcripts.append(list(transcript))

    def reset(self) -> None:
        self.transcripts.clear()

    def __len__(self) -> int:
        return len(self.transcripts)


def fold_in(
    embeddings: np.ndarray,
    word_to_id: Mapping[str, int],
    transcript: list[str],
) -> np.ndarray:
    """Mean embedding of the in-vocabulary transcript tokens, with multiplicity.

    Out-of-vocabulary tokens are skipped; a transcript with no usable token
    folds to the zero vector.
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    rows = [embeddings[word_to_id[tok]] for tok in transcript if tok in word_to_id]
    if not rows:
        return np.zeros(embeddings.shape[1], dtype=np.float64)
    return np.mean(rows, axis=0)


def compose_history(
    vectors: list[np.ndarray],
    decay: float,
    dim: int | None = None,
) -> np.ndarray:
    """Decayed convex combination of utterance vectors, oldest first.

    The most recent vector has distance 1 and weight decay**0 (0**0 counts as
    1, so decay 0 returns the most recent vector); weights are normalized to
    sum to one.  An empty list signals "no history" and returns the zero
    vector, whose size must then be supplied via ``dim``.
    """
    if not 0.0 <= decay <= 1.0:
        raise ValueError(f"decay must lie in [0, 1], got {decay}")
    if not vectors:
        if dim is None:
            raise ValueError("empty history needs an explicit dim for the zero vector")
        return np.zeros(dim, dtype=np.float64)
    stacked = np.stack([np.asarray(v, dtype=np.float64) for v in vectors])
    n_vectors = stacked.shape[0]
    # index 0 is the oldest vector, distance n_vectors; the last has distance 1
    distances = np.arange(n_vectors, 0, -1, dtype=np.float64)
    weights = decay ** (distances - 1.0)
    weights /= weights.sum()
    return weights @ stacked


def history_vector(
    state: HistoryState,
    embeddings: np.ndarray,
    word_to_id: Mapping[str, int],
) -> np.ndarray:
    """Fold in every remembered transcript and mix with the state's decay."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    vectors = [fold_in(embeddings, word_to_id, t) for t in state.transcripts]
    return compose_history(vectors, state.decay, dim=embeddings.shape[1])
