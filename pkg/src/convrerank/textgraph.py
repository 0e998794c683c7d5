"""Heterogeneous chunk-word graph with NPMI and term-frequency edges.

Nodes are the vocabulary words followed by the corpus chunks.  Word pairs are
connected when their normalized pointwise mutual information over chunk-level
presence is defined and above a threshold; each chunk connects to the words it
contains with the raw occurrence count as weight.  Unit self-loops keep every
degree positive before symmetric normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .corpus import Chunk, Vocabulary


# ---------------------------------------------------------------------------
# co-occurrence counting
# ---------------------------------------------------------------------------


@dataclass
class CoocCounts:
    """Chunk-level presence counts for single words and word pairs."""

    n_chunks: int
    doc_freq: dict[int, int]
    pair_freq: dict[tuple[int, int], int]


def count_cooccurrence(chunks: list[Chunk], vocab: Vocabulary) -> CoocCounts:
    """Count, per chunk, which vocabulary words and word pairs are present."""
    if not chunks:
        raise ValueError("no chunks to count")
    doc_freq: dict[int, int] = {}
    pair_freq: dict[tuple[int, int], int] = {}
    for chunk in chunks:
        ids = sorted({vocab.word_to_id[tok] for tok in chunk.tokens if tok in vocab})
        for word_id in ids:
            doc_freq[word_id] = doc_freq.get(word_id, 0) + 1
        for pair in combinations(ids, 2):
            pair_freq[pair] = pair_freq.get(pair, 0) + 1
    return CoocCounts(n_chunks=len(chunks), doc_freq=doc_freq, pair_freq=pair_freq)


def npmi(counts: CoocCounts, word_i: int, word_j: int) -> float | None:
    """Normalized pointwise mutual information of two words over chunks.

    Probabilities are presence fractions: p(i) = chunks containing i divided
    by total chunks, p(i, j) likewise for joint presence.  The value is the
    pointwise mutual information scaled by -1/log p(i, j), which maps it into
    [-1, 1].  Returns None when the pair never co-occurs (undefined) and
    exactly 1.0 when the pair is present in every chunk.
    """
    if word_i == word_j:
        raise ValueError(f"self-pair: NPMI is undefined for identical word ids ({word_i})")
    key = (word_i, word_j) if word_i < word_j else (word_j, word_i)
    joint = counts.pair_freq.get(key, 0)
    if joint == 0:
        return None
    total = counts.n_chunks
    if joint == total:
        return 1.0
    p_joint = joint / total
    p_i = counts.doc_freq[word_i] / total
    p_j = counts.doc_freq[word_j] / total
    return -math.log(p_joint / (p_i * p_j)) / math.log(p_joint)


# ---------------------------------------------------------------------------
# graph construction
# ---------------------------------------------------------------------------


@dataclass
class HeteroGraph:
    """Symmetric weighted graph over word and chunk nodes.

    ``adjacency`` already carries the unit self-loops; ``normalized`` is the
    symmetric degree normalization used by the graph convolution.
    """

    n_words: int
    n_chunks: int
    adjacency: sp.csr_matrix
    normalized: sp.csr_matrix
    degrees: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.n_words + self.n_chunks

    @property
    def chunk_rows(self) -> slice:
        return slice(self.n_words, self.n_nodes)

    def triplets(self) -> list[tuple[int, int, float]]:
        """Adjacency entries as (row, col, weight), sorted by row then col."""
        coo = self.adjacency.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[k]), int(coo.col[k]), float(coo.data[k])) for k in order]


def normalize_adjacency(adjacency: sp.spmatrix) -> sp.csr_matrix:
    """Scale entry (i, j) by 1/sqrt(d_i d_j) where d is the row sum.

    The two scale factors are multiplied together first so the result stays
    bit-for-bit symmetric whenever the input is.
    """
    matrix = sp.csr_matrix(adjacency, dtype=np.float64)
    degrees = np.asarray(matrix.sum(axis=1)).ravel()
    if np.any(degrees <= 0.0):
        bad = int(np.flatnonzero(degrees <= 0.0)[0])
        raise ValueError(f"node {bad} has non-positive degree {degrees[bad]}: cannot normalize")
    inv_sqrt = 1.0 / np.sqrt(degrees)
    coo = matrix.tocoo()
    data = coo.data * (inv_sqrt[coo.row] * inv_sqrt[coo.col])
    return sp.csr_matrix((data, (coo.row, coo.col)), shape=matrix.shape)


def build_adjacency(
    counts: CoocCounts,
    chunks: list[Chunk],
    vocab: Vocabulary,
    npmi_threshold: float = 0.0,
    chunk_word_tfidf: bool = False,
) -> HeteroGraph:
    """Assemble the heterogeneous adjacency and its normalized form.

    Word-word edges carry NPMI and are kept only where it is defined and
    strictly above ``npmi_threshold``.  Chunk-word edges carry the raw
    occurrence count of the word in the chunk, or that count scaled by a
    smoothed inverse document frequency when ``chunk_word_tfidf`` is set.
    """
    if npmi_threshold < 0.0:
        raise ValueError(
            f"npmi_threshold must be >= 0 (edge weights must stay positive), got {npmi_threshold}"
        )
    if counts.n_chunks != len(chunks):
        raise ValueError("counts were built from a different number of chunks")
    n_words = len(vocab)
    n_chunks = len(chunks)
    n_nodes = n_words + n_chunks
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []

    for word_i, word_j in sorted(counts.pair_freq):
        value = npmi(counts, word_i, word_j)
        if value is None or value <= npmi_threshold:
            continue
        rows.extend((word_i, word_j))
        cols.extend((word_j, word_i))
        vals.extend((value, value))

    idf = None
    if chunk_word_tfidf:
        idf = {
            word_id: math.log((1.0 + n_chunks) / (1.0 + freq)) + 1.0
            for word_id, freq in counts.doc_freq.items()
        }
    for chunk_idx, chunk in enumerate(chunks):
        node = n_words + chunk_idx
        for word, count in sorted(chunk.token_counts().items()):
            if word not in vocab:
                continue
            word_id = vocab.word_to_id[word]
            weight = float(count)
            if idf is not None:
                weight *= idf[word_id]
            rows.extend((node, word_id))
            cols.extend((word_id, node))
            vals.extend((weight, weight))

    for node in range(n_nodes):
        rows.append(node)
        cols.append(node)
        vals.append(1.0)

    adjacency = sp.csr_matrix(
        (np.asarray(vals, dtype=np.float64), (np.asarray(rows), np.asarray(cols))),
        shape=(n_nodes, n_nodes),
    )
    normalized = normalize_adjacency(adjacency)
    degrees = np.asarray(adjacency.sum(axis=1)).ravel()
    return HeteroGraph(
        n_words=n_words,
        n_chunks=n_chunks,
        adjacency=adjacency,
        normalized=normalized,
        degrees=degrees,
    )


# ---------------------------------------------------------------------------
# graph dump
# ---------------------------------------------------------------------------

_GRAPH_HEADER = "# heterograph v1"


def write_graph(path: str | Path, graph: HeteroGraph) -> None:
    """Dump the adjacency as sorted "row col weight" lines with a header.

    The header records the node-id convention: word nodes first, chunk nodes
    after them.  Weights use repr so they round-trip exactly.
    """
    lines = [
        _GRAPH_HEADER,
        f"# n_words {graph.n_words}",
        f"# n_chunks {graph.n_chunks}",
        "# node ids: words occupy [0, n_words), chunks occupy [n_words, n_words + n_chunks)",
    ]
    for row, col, weight in graph.triplets():
        lines.append(f"{row} {col} {weight!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_graph(path: str | Path) -> HeteroGraph:
    """Rebuild a HeteroGraph from a dump produced by :func:`write_graph`."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != _GRAPH_HEADER:
        raise ValueError(f"{path} is not a heterograph dump")
    n_words = n_chunks = None
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for line in lines[1:]:
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "n_words":
                n_words = int(parts[1])
            elif len(parts) == 2 and parts[0] == "n_chunks":
                n_chunks = int(parts[1])
            continue
        if not line.strip():
            continue
        row_s, col_s, weight_s = line.split()
        rows.append(int(row_s))
        cols.append(int(col_s))
        vals.append(float(weight_s))
    if n_words is None or n_chunks is None:
        raise ValueError(f"{path} is missing node-count header lines")
    n_nodes = n_words + n_chunks
    adjacency = sp.csr_matrix(
        (np.asarray(vals, dtype=np.float64), (np.asarray(rows), np.asarray(cols))),
        shape=(n_nodes, n_nodes),
    )
    normalized = normalize_adjacency(adjacency)
    degrees = np.asarray(adjacency.sum(axis=1)).ravel()
    return HeteroGraph(
        n_words=n_words,
        n_chunks=n_chunks,
        adjacency=adjacency,
        normalized=normalized,
        degrees=degrees,
    )
