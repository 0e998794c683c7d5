"""Chunk pseudo-classes: TF-IDF vectors clustered with seeded K-means."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Chunk, Vocabulary

DEFAULT_N_CLASSES = 8
DEFAULT_MAX_ITERS = 100


# ---------------------------------------------------------------------------
# TF-IDF
# ---------------------------------------------------------------------------


def tfidf(chunks: list[Chunk], vocab: Vocabulary) -> np.ndarray:
    """Row-normalized TF-IDF matrix, one row per chunk.

    Entry (k, i) is the occurrence count of word i in chunk k scaled by
    ln((1 + n_chunks) / (1 + doc_freq_i)) + 1; every non-empty row is then
    L2-normalized.
    """
    if not chunks:
        raise ValueError("no chunks for TF-IDF")
    n_chunks = len(chunks)
    n_words = len(vocab)
    counts = np.zeros((n_chunks, n_words), dtype=np.float64)
    for k, chunk in enumerate(chunks):
        for word, count in chunk.token_counts().items():
            if word in vocab:
                counts[k, vocab.word_to_id[word]] = float(count)
    doc_freq = (counts > 0.0).sum(axis=0)
    idf = np.log((1.0 + n_chunks) / (1.0 + doc_freq)) + 1.0
    matrix = counts * idf
    norms = np.linalg.norm(matrix, axis=1)
    nonzero = norms > 0.0
    matrix[nonzero] /= norms[nonzero, None]
    return matrix


# ---------------------------------------------------------------------------
# K-means
# ---------------------------------------------------------------------------


@dataclass
class PseudoLabels:
    """Cluster assignment per chunk plus the fitted centroids."""

    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    inertia_history: list[float] = field(default_factory=list)

    @property
    def n_classes(self) -> int:
        return self.centroids.shape[0]


def _squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # ||x - c||^2 expanded; clip tiny negatives from cancellation
    d2 = (
        (points * points).sum(axis=1)[:, None]
        + (centroids * centroids).sum(axis=1)[None, :]
        - 2.0 * points @ centroids.T
    )
    return np.maximum(d2, 0.0)


def _init_plus_plus(points: np.ndarray, n_classes: int, rng: np.random.Generator) -> np.ndarray:
    n_points = points.shape[0]
    centroids = np.empty((n_classes, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n_points))
    centroids[0] = points[first]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for k in range(1, n_classes):
        total = d2.sum()
        if total > 0.0:
            chosen = int(rng.choice(n_points, p=d2 / total))
        else:
            chosen = int(rng.integers(n_points))
        centroids[k] = points[chosen]
        d2 = np.minimum(d2, ((points - centroids[k]) ** 2).sum(axis=1))
    return centroids


def kmeans(
    points: np.ndarray,
    n_classes: int = DEFAULT_N_CLASSES,
    seed: int = 0,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> PseudoLabels:
    """Lloyd iterations from a seeded k-means++ start.

    Stops at an assignment fixpoint or after ``max_iters`` iterations.  A
    cluster that loses all members is re-seeded at the point currently
    farthest from its assigned centroid, which keeps the logged inertia
    non-increasing.  Identical seeds give bit-identical results.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("kmeans expects a non-empty 2-d array")
    n_points = points.shape[0]
    if n_classes < 1:
        raise ValueError(f"n_classes must be >= 1, got {n_classes}")
    if n_classes > n_points:
        raise ValueError(f"n_classes={n_classes} exceeds the number of points ({n_points})")
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")

    rng = np.random.default_rng(seed)
    centroids = _init_plus_plus(points, n_classes, rng)
    prev_labels: np.ndarray | None = None
    labels = np.zeros(n_points, dtype=np.int64)
    history: list[float] = []

    for _ in range(max_iters):
        d2 = _squared_distances(points, centroids)
        labels = d2.argmin(axis=1)
        contrib = d2[np.arange(n_points), labels]
        history.append(float(contrib.sum()))

        updated = centroids.copy()
        member_counts = np.bincount(labels, minlength=n_classes)
        for k in range(n_classes):
            if member_counts[k] > 0:
                updated[k] = points[labels == k].mean(axis=0)
        if (member_counts == 0).any():
            stealable = contrib.copy()
            for k in np.flatnonzero(member_counts == 0):
                farthest = int(stealable.argmax())
                updated[k] = points[farthest]
                labels[farthest] = k
                stealable[farthest] = -1.0

        converged = prev_labels is not None and np.array_equal(labels, prev_labels)
        prev_labels = labels.copy()
        centroids = updated
        if converged:
            break

    final_d2 = _squared_distances(points, centroids)
    inertia = float(final_d2[np.arange(n_points), labels].sum())
    return PseudoLabels(
        labels=labels.astype(np.int64),
        centroids=centroids,
        inertia=inertia,
        inertia_history=history,
    )


# ---------------------------------------------------------------------------
# label file
# ---------------------------------------------------------------------------


def write_labels(path: str | Path, labels: PseudoLabels) -> None:
    """Write "chunk_id class_id" lines in chunk order."""
    lines = [f"{chunk_id} {int(class_id)}" for chunk_id, class_id in enumerate(labels.labels)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_labels(path: str | Path) -> np.ndarray:
    """Read a label file back into a dense per-chunk class array."""
    pairs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        chunk_s, class_s = line.split()
        pairs.append((int(chunk_s), int(class_s)))
    pairs.sort()
    expected = list(range(len(pairs)))
    if [chunk_id for chunk_id, _ in pairs] != expected:
        raise ValueError(f"{path}: chunk ids are not dense from 0")
    return np.asarray([class_id for _, class_id in pairs], dtype=np.int64)
